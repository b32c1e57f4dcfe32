#include "satkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "satkit/csv.hpp"
#include "satkit/hash.hpp"
#include "satkit/parallel.hpp"
#include "satkit/porter.hpp"

namespace satkit {

std::optional<double> ReviewRecord::mean_rating() const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : ratings) {
        if (r) {
            sum += *r;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

// Accepts YYYY-MM or YYYY-MM-DD; returns YYYY-MM.
std::optional<std::string> parse_month(const std::string& date) {
    if (date.size() != 7 && date.size() != 10) return std::nullopt;
    if (date[4] != '-') return std::nullopt;
    if (date.size() == 10 && date[7] != '-') return std::nullopt;
    const std::string_view year(date.data(), 4);
    const std::string_view month(date.data() + 5, 2);
    if (!all_digits(year) || !all_digits(month)) return std::nullopt;
    const int m = (month[0] - '0') * 10 + (month[1] - '0');
    if (m < 1 || m > 12) return std::nullopt;
    if (date.size() == 10) {
        const std::string_view day(date.data() + 8, 2);
        if (!all_digits(day)) return std::nullopt;
    }
    return date.substr(0, 7);
}

// "" -> missing; "1".."5" -> value; anything else -> error.
std::optional<std::optional<int>> parse_rating(const std::string& field) {
    if (field.empty()) return std::optional<int>{};
    if (field.size() == 1 && field[0] >= '1' && field[0] <= '5') {
        return std::optional<int>{field[0] - '0'};
    }
    return std::nullopt;
}

}  // namespace

LoadResult load_reviews(const std::string& path, const ReviewSchema& schema) {
    CsvReader reader(path);
    const std::size_t c_id = reader.column(schema.review_id);
    const std::size_t c_practice = reader.column(schema.practice_id);
    const std::size_t c_date = reader.column(schema.posted_date);
    const std::size_t c_text = reader.column(schema.text);
    std::array<std::size_t, kNumRatings> c_ratings{};
    for (std::size_t i = 0; i < kNumRatings; ++i) {
        c_ratings[i] = reader.column(schema.ratings[i]);
    }

    LoadResult result;
    std::vector<std::string> row;
    while (reader.next(row)) {
        ++result.report.rows_read;
        const std::size_t line = result.report.rows_read;
        if (row.size() != reader.header().size()) {
            result.report.rejections.emplace_back(line, "wrong field count");
            continue;
        }
        ReviewRecord rec;
        rec.review_id = row[c_id];
        rec.practice_id = row[c_practice];
        rec.text = row[c_text];
        auto month = parse_month(row[c_date]);
        if (!month) {
            result.report.rejections.emplace_back(line, "unparsable posted_date '" + row[c_date] + "'");
            continue;
        }
        rec.posted_month = *month;
        bool bad_rating = false;
        for (std::size_t i = 0; i < kNumRatings; ++i) {
            auto parsed = parse_rating(row[c_ratings[i]]);
            if (!parsed) {
                result.report.rejections.emplace_back(
                    line, "rating " + schema.ratings[i] + " outside 1..5: '" + row[c_ratings[i]] + "'");
                bad_rating = true;
                break;
            }
            rec.ratings[i] = *parsed;
        }
        if (bad_rating) continue;
        result.reviews.push_back(std::move(rec));
    }
    result.report.accepted = result.reviews.size();
    result.report.rejected = result.report.rejections.size();
    return result;
}

std::vector<RegisterRow> load_register_table(const std::string& path) {
    CsvReader reader(path);
    const std::size_t c_p = reader.column("practice_id");
    const std::size_t c_l = reader.column("lsoa");
    const std::size_t c_n = reader.column("patients");
    std::vector<RegisterRow> rows;
    std::vector<std::string> row;
    while (reader.next(row)) {
        RegisterRow r;
        r.practice_id = row[c_p];
        r.lsoa = row[c_l];
        r.patients = std::stoll(row[c_n]);
        if (r.patients < 0) {
            throw std::runtime_error(path + ": negative patient count for practice " + r.practice_id);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ImdRow> load_imd_table(const std::string& path) {
    CsvReader reader(path);
    const std::size_t c_l = reader.column("lsoa");
    const std::size_t c_s = reader.column("imd_score");
    std::vector<ImdRow> rows;
    std::vector<std::string> row;
    while (reader.next(row)) {
        rows.push_back({row[c_l], std::stod(row[c_s])});
    }
    return rows;
}

std::vector<CcgRow> load_ccg_table(const std::string& path) {
    CsvReader reader(path);
    const std::size_t c_p = reader.column("practice_id");
    const std::size_t c_c = reader.column("ccg_id");
    std::vector<CcgRow> rows;
    std::vector<std::string> row;
    while (reader.next(row)) {
        rows.push_back({row[c_p], row[c_c]});
    }
    return rows;
}

EnrichResult enrich_reviews(const std::vector<ReviewRecord>& reviews,
                            const std::vector<RegisterRow>& register_table,
                            const std::vector<ImdRow>& imd_table,
                            const std::vector<CcgRow>& ccg_table) {
    std::unordered_map<std::string, double> imd_by_lsoa;
    for (const auto& r : imd_table) imd_by_lsoa[r.lsoa] = r.score;

    struct PracticeInfo {
        double weighted_sum = 0.0;
        long long patients = 0;
        bool lsoa_missing_imd = false;
    };
    std::unordered_map<std::string, PracticeInfo> practices;
    for (const auto& r : register_table) {
        auto& info = practices[r.practice_id];
        auto it = imd_by_lsoa.find(r.lsoa);
        if (it == imd_by_lsoa.end()) {
            info.lsoa_missing_imd = true;
            continue;
        }
        info.weighted_sum += static_cast<double>(r.patients) * it->second;
        info.patients += r.patients;
    }

    std::unordered_map<std::string, std::string> ccg_by_practice;
    for (const auto& r : ccg_table) ccg_by_practice[r.practice_id] = r.ccg_id;

    EnrichResult result;
    for (const auto& review : reviews) {
        auto pit = practices.find(review.practice_id);
        if (pit == practices.end()) {
            ++result.report.dropped;
            ++result.report.reasons["practice missing from register"];
            continue;
        }
        if (pit->second.lsoa_missing_imd) {
            ++result.report.dropped;
            ++result.report.reasons["lsoa missing deprivation score"];
            continue;
        }
        if (pit->second.patients == 0) {
            ++result.report.dropped;
            ++result.report.reasons["zero register"];
            continue;
        }
        auto cit = ccg_by_practice.find(review.practice_id);
        if (cit == ccg_by_practice.end()) {
            ++result.report.dropped;
            ++result.report.reasons["practice missing from ccg table"];
            continue;
        }
        EnrichedReview er;
        static_cast<ReviewRecord&>(er) = review;
        er.ccg_id = cit->second;
        er.imd_weighted = pit->second.weighted_sum / static_cast<double>(pit->second.patients);
        er.patients_registered = pit->second.patients;
        result.reviews.push_back(std::move(er));
    }
    result.report.retained = result.reviews.size();
    return result;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (c >= 'A' && c <= 'Z') {
            current.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if (c >= 'a' && c <= 'z') {
            current.push_back(static_cast<char>(c));
        } else {
            if (!current.empty()) {
                tokens.push_back(std::move(current));
                current.clear();
            }
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string stem_token(const std::string& token, StemmerKind kind) {
    return kind == StemmerKind::porter ? porter_stem(token) : token;
}

std::uint64_t Vocabulary::fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : terms) {
        h = fnv1a64(t, h);
        h = fnv1a64("\x1f", h);
    }
    return h;
}

long long BagCorpus::doc_length(std::size_t d) const {
    long long n = 0;
    for (const auto& e : docs[d]) n += e.count;
    return n;
}

std::vector<std::size_t> BagCorpus::empty_docs() const {
    std::vector<std::size_t> out;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (docs[d].empty()) out.push_back(d);
    }
    return out;
}

PreprocessResult preprocess(const std::vector<ReviewRecord>& reviews,
                            const PreprocessConfig& config) {
    if (reviews.empty()) {
        throw std::invalid_argument("preprocess: empty review list");
    }
    if (config.min_corpus_count <= 0 || config.min_corpus_count >= config.max_corpus_count) {
        throw std::invalid_argument("preprocess: require 0 < min_corpus_count < max_corpus_count");
    }
    const auto& stopwords =
        config.stopwords.empty() ? default_stopwords() : config.stopwords;

    // Per-document stemmed token counts; document order preserved regardless
    // of worker count.
    std::vector<std::map<std::string, int>> doc_counts(reviews.size());
    parallel_for(reviews.size(), config.threads, [&](std::size_t d) {
        auto& counts = doc_counts[d];
        for (auto& token : tokenize(reviews[d].text)) {
            if (static_cast<int>(token.size()) < config.min_token_len) continue;
            if (stopwords.count(token)) continue;
            ++counts[stem_token(token, config.stemmer)];
        }
    });

    std::map<std::string, long long> totals;
    for (const auto& counts : doc_counts) {
        for (const auto& [term, n] : counts) totals[term] += n;
    }

    PreprocessResult result;
    auto& vocab = result.vocabulary;
    auto& report = result.report;
    for (const auto& [term, n] : totals) {
        if (n < config.min_corpus_count || n > config.max_corpus_count) {
            ++report.removed_term_count;
            report.removed_occurrence_count += n;
        } else {
            vocab.index.emplace(term, static_cast<int>(vocab.terms.size()));
            vocab.terms.push_back(term);
            vocab.corpus_counts.push_back(n);
            ++report.retained_term_count;
            report.retained_occurrence_count += n;
        }
    }

    auto& corpus = result.corpus;
    corpus.docs.resize(reviews.size());
    corpus.doc_ids.reserve(reviews.size());
    for (std::size_t d = 0; d < reviews.size(); ++d) {
        corpus.doc_ids.push_back(reviews[d].review_id);
        for (const auto& [term, n] : doc_counts[d]) {
            auto it = vocab.index.find(term);
            if (it == vocab.index.end()) continue;
            corpus.docs[d].push_back({it->second, n});
            corpus.total_tokens += n;
        }
        // std::map iteration is term-ordered, and the vocabulary index is
        // assigned in the same order, so entries are already index-ascending.
    }

    corpus.vocab_size = vocab.size();

    if (corpus.total_tokens == 0) {
        throw std::runtime_error("degenerate corpus: every document is empty after pruning");
    }
    return result;
}

}  // namespace satkit
