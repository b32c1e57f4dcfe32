#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace satkit {

// The six rating dimensions attached to a review, in canonical order.
inline constexpr std::array<std::string_view, 6> kRatingKeys = {
    "r_phone", "r_appt", "r_dignity", "r_involved", "r_recommend", "r_info",
};
inline constexpr std::array<std::string_view, 6> kRatingNames = {
    "phone access ease",
    "appointment ease",
    "given dignity & respect",
    "involved in care decisions",
    "likely to recommend",
    "up-to-date GP information",
};
inline constexpr std::size_t kNumRatings = 6;

struct ReviewRecord {
    std::string review_id;
    std::string practice_id;
    std::string posted_month;  // YYYY-MM
    std::string text;
    std::array<std::optional<int>, kNumRatings> ratings;  // each value in 1..5

    // Mean of the ratings that are present; empty if none are.
    std::optional<double> mean_rating() const;
};

struct EnrichedReview : ReviewRecord {
    std::string ccg_id;
    double imd_weighted = 0.0;  // register-weighted mean deprivation
    long long patients_registered = 0;
};

// Column-name mapping for the reviews CSV. Defaults follow the documented
// file contract; override when ingesting files with different headers.
struct ReviewSchema {
    std::string review_id = "review_id";
    std::string practice_id = "practice_id";
    std::string posted_date = "posted_date";
    std::string text = "text";
    std::array<std::string, kNumRatings> ratings = {
        "r_phone", "r_appt", "r_dignity", "r_involved", "r_recommend", "r_info"};
};

struct LoadReport {
    std::size_t rows_read = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    // (1-based data row number, reason); never silently dropped.
    std::vector<std::pair<std::size_t, std::string>> rejections;
};

struct LoadResult {
    std::vector<ReviewRecord> reviews;
    LoadReport report;
};

// Reads a reviews CSV (RFC 4180, UTF-8). Rows with unparsable dates, ratings
// outside 1..5, or wrong field counts are rejected with a reason. Throws on
// a missing file or a missing mandatory column.
LoadResult load_reviews(const std::string& path, const ReviewSchema& schema = {});

struct RegisterRow {
    std::string practice_id;
    std::string lsoa;
    long long patients = 0;
};
struct ImdRow {
    std::string lsoa;
    double score = 0.0;
};
struct CcgRow {
    std::string practice_id;
    std::string ccg_id;
};

std::vector<RegisterRow> load_register_table(const std::string& path);
std::vector<ImdRow> load_imd_table(const std::string& path);
std::vector<CcgRow> load_ccg_table(const std::string& path);

struct DropReport {
    std::size_t retained = 0;
    std::size_t dropped = 0;
    std::unordered_map<std::string, std::size_t> reasons;
};

struct EnrichResult {
    std::vector<EnrichedReview> reviews;
    DropReport report;
};

// Joins reviews with the register, deprivation, and CCG tables.
// imd_weighted is the patient-weighted mean deprivation score over the
// practice's LSOAs; patients_registered the register total. Reviews whose
// practice is missing from any table (or has a zero register) are dropped
// and counted by reason.
EnrichResult enrich_reviews(const std::vector<ReviewRecord>& reviews,
                            const std::vector<RegisterRow>& register_table,
                            const std::vector<ImdRow>& imd_table,
                            const std::vector<CcgRow>& ccg_table);

enum class StemmerKind { porter, none };

struct PreprocessConfig {
    int min_token_len = 3;
    long long min_corpus_count = 10;
    long long max_corpus_count = 100000;
    std::unordered_set<std::string> stopwords;  // empty = use default_stopwords()
    StemmerKind stemmer = StemmerKind::porter;
    unsigned threads = 0;  // 0 = hardware concurrency
};

// Built-in English stopword list (classic short list; apostrophe forms are
// omitted because the tokenizer splits on non-alphabetic characters).
const std::unordered_set<std::string>& default_stopwords();

struct Vocabulary {
    std::vector<std::string> terms;                  // index -> term, sorted
    std::unordered_map<std::string, int> index;      // term -> index
    std::vector<long long> corpus_counts;            // retained counts per term

    int size() const { return static_cast<int>(terms.size()); }
    std::uint64_t fingerprint() const;
};

struct BagEntry {
    int term = 0;
    int count = 0;
};

struct BagCorpus {
    std::vector<std::vector<BagEntry>> docs;  // sparse, term-index ascending
    std::vector<std::string> doc_ids;         // review_id per document
    long long total_tokens = 0;
    int vocab_size = 0;  // 0 = infer from the largest term index

    std::size_t num_docs() const { return docs.size(); }
    long long doc_length(std::size_t d) const;
    // Documents left empty by pruning; they stay in the corpus, flagged here.
    std::vector<std::size_t> empty_docs() const;
};

struct PruneReport {
    long long removed_term_count = 0;
    long long removed_occurrence_count = 0;
    long long retained_term_count = 0;
    long long retained_occurrence_count = 0;
};

struct PreprocessResult {
    BagCorpus corpus;
    Vocabulary vocabulary;
    PruneReport report;
};

// Fixed pipeline: lowercase, split on non-alphabetic bytes, drop tokens
// shorter than min_token_len, drop stopwords, stem, then drop terms whose
// total stemmed corpus count falls outside [min_corpus_count,
// max_corpus_count]. Deterministic for a given input and config.
// Throws "degenerate corpus" if every document prunes to empty.
PreprocessResult preprocess(const std::vector<ReviewRecord>& reviews,
                            const PreprocessConfig& config = {});

// Single-token helper used by the pipeline: expects lowercase input.
std::string stem_token(const std::string& token, StemmerKind kind = StemmerKind::porter);

// Lowercase + split on non-alphabetic bytes (shared by preprocess and the
// cluster-label machinery).
std::vector<std::string> tokenize(std::string_view text);

}  // namespace satkit
