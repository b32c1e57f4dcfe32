#include "satkit/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satkit/parallel.hpp"
#include "satkit/rng.hpp"

namespace satkit {

TopicScores semantic_coherence(const LdaModel& model, const BagCorpus& corpus, int m) {
    if (m < 2) throw std::invalid_argument("semantic_coherence: need m >= 2");

    TopicScores scores;
    scores.per_topic.resize(static_cast<std::size_t>(model.num_topics));

    for (int t = 0; t < model.num_topics; ++t) {
        const auto top = top_words(model, t, m);
        const int n = static_cast<int>(top.size());

        // Document frequencies and pairwise co-document frequencies of the
        // top terms, from a single pass over the corpus.
        std::vector<long long> doc_freq(static_cast<std::size_t>(n), 0);
        std::vector<long long> co_freq(static_cast<std::size_t>(n) * n, 0);
        std::vector<int> present;
        for (const auto& doc : corpus.docs) {
            present.clear();
            for (int i = 0; i < n; ++i) {
                const int term = top[static_cast<std::size_t>(i)].first;
                for (const auto& e : doc) {
                    if (e.term == term) {
                        present.push_back(i);
                        break;
                    }
                }
            }
            for (std::size_t a = 0; a < present.size(); ++a) {
                ++doc_freq[static_cast<std::size_t>(present[a])];
                for (std::size_t b = a + 1; b < present.size(); ++b) {
                    ++co_freq[static_cast<std::size_t>(present[a]) * n + present[b]];
                    ++co_freq[static_cast<std::size_t>(present[b]) * n + present[a]];
                }
            }
        }

        double c = 0.0;
        for (int i = 1; i < n; ++i) {
            for (int l = 0; l < i; ++l) {
                if (doc_freq[static_cast<std::size_t>(l)] == 0) {
                    throw std::logic_error("semantic_coherence: top word absent from corpus");
                }
                c += std::log((co_freq[static_cast<std::size_t>(i) * n + l] + 1.0) /
                              static_cast<double>(doc_freq[static_cast<std::size_t>(l)]));
            }
        }
        scores.per_topic[static_cast<std::size_t>(t)] = c;
    }

    double sum = 0.0;
    for (double s : scores.per_topic) sum += s;
    scores.mean = sum / static_cast<double>(model.num_topics);
    return scores;
}

namespace {

// Fraction of values <= x.
double ecdf(const std::vector<double>& sorted, double x) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

}  // namespace

TopicScores exclusivity(const LdaModel& model, int m, double w) {
    if (model.num_topics < 2) {
        throw std::invalid_argument("exclusivity undefined for a single topic");
    }
    if (w <= 0.0 || w >= 1.0) throw std::invalid_argument("exclusivity: need 0 < w < 1");

    const int K = model.num_topics;
    const int V = model.vocab_size;

    // Column sums of the topic-word matrix.
    std::vector<double> col_sum(static_cast<std::size_t>(V), 0.0);
    for (int k = 0; k < K; ++k) {
        for (int v = 0; v < V; ++v) col_sum[static_cast<std::size_t>(v)] += model.topic_word_at(k, v);
    }

    TopicScores scores;
    scores.per_topic.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        std::vector<double> excl(static_cast<std::size_t>(V));
        std::vector<double> freq(static_cast<std::size_t>(V));
        for (int v = 0; v < V; ++v) {
            freq[static_cast<std::size_t>(v)] = model.topic_word_at(k, v);
            excl[static_cast<std::size_t>(v)] =
                col_sum[static_cast<std::size_t>(v)] > 0.0
                    ? model.topic_word_at(k, v) / col_sum[static_cast<std::size_t>(v)]
                    : 0.0;
        }
        std::vector<double> excl_sorted = excl;
        std::vector<double> freq_sorted = freq;
        std::sort(excl_sorted.begin(), excl_sorted.end());
        std::sort(freq_sorted.begin(), freq_sorted.end());

        const auto top = top_words(model, k, m);
        double sum = 0.0;
        for (const auto& [v, p] : top) {
            (void)p;
            const double e = ecdf(excl_sorted, excl[static_cast<std::size_t>(v)]);
            const double f = ecdf(freq_sorted, freq[static_cast<std::size_t>(v)]);
            sum += 1.0 / (w / e + (1.0 - w) / f);
        }
        scores.per_topic[static_cast<std::size_t>(k)] = sum / static_cast<double>(top.size());
    }

    double total = 0.0;
    for (double s : scores.per_topic) total += s;
    scores.mean = total / static_cast<double>(K);
    return scores;
}

std::vector<double> normalize_by_mean(const std::vector<double>& values) {
    std::vector<double> out = values;
    if (out.empty()) return out;
    double sum = 0.0;
    for (double x : out) sum += x;
    const double mean = sum / static_cast<double>(out.size());
    if (mean == 0.0) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    for (double& x : out) {
        x = mean > 0.0 ? x / mean : 2.0 - x / mean;
    }
    // The recomputed mean lands within an ulp of 1; nudge additively so
    // downstream checks of mean == 1.0 hold bit-exactly.
    for (int pass = 0; pass < 8; ++pass) {
        double s = 0.0;
        for (double x : out) s += x;
        const double m = s / static_cast<double>(out.size());
        if (m == 1.0) break;
        for (double& x : out) x += 1.0 - m;
    }
    return out;
}

SweepTable sweep(const BagCorpus& corpus, const SweepConfig& config) {
    if (config.k_min < 2 || config.k_min > config.k_max || config.step < 1) {
        throw std::invalid_argument("sweep: require 2 <= k_min <= k_max and step >= 1");
    }
    std::vector<int> ks;
    for (int k = config.k_min; k <= config.k_max; k += config.step) ks.push_back(k);

    SweepTable table;
    table.config = config;
    table.entries.resize(ks.size());
    std::vector<std::string> errors(ks.size());

    parallel_for(ks.size(), config.threads, [&](std::size_t i) {
        const int k = ks[i];
        try {
            LdaHyperparams hyper = config.hyper;
            hyper.seed = config.hyper.seed ^ static_cast<std::uint64_t>(k);
            const LdaModel model = fit_lda(corpus, k, hyper);
            ModelScore score;
            score.k = k;
            auto coh = semantic_coherence(model, corpus, config.top_words);
            auto exc = exclusivity(model, config.top_words, config.frex_weight);
            score.coherence_raw = coh.mean;
            score.exclusivity_raw = exc.mean;
            score.coherence_per_topic = std::move(coh.per_topic);
            score.exclusivity_per_topic = std::move(exc.per_topic);
            table.entries[i] = std::move(score);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (!errors[i].empty()) table.failures.emplace_back(ks[i], errors[i]);
    }
    if (!table.failures.empty()) {
        std::erase_if(table.entries, [](const ModelScore& s) { return s.k == 0; });
    }

    std::vector<double> coh_raw, exc_raw;
    for (const auto& e : table.entries) {
        coh_raw.push_back(e.coherence_raw);
        exc_raw.push_back(e.exclusivity_raw);
    }
    const auto coh_norm = normalize_by_mean(coh_raw);
    const auto exc_norm = normalize_by_mean(exc_raw);
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        table.entries[i].coherence_norm = coh_norm[i];
        table.entries[i].exclusivity_norm = exc_norm[i];
    }
    return table;
}

SelectionRationale select_k(const SweepTable& table) {
    if (table.entries.empty()) throw std::invalid_argument("select_k: empty sweep table");

    std::size_t best = 0;
    for (std::size_t i = 1; i < table.entries.size(); ++i) {
        const double cur = table.entries[i].coherence_norm + table.entries[i].exclusivity_norm;
        const double win = table.entries[best].coherence_norm + table.entries[best].exclusivity_norm;
        if (cur > win || (cur == win && table.entries[i].k < table.entries[best].k)) {
            best = i;
        }
    }
    std::size_t second = best == 0 ? 1 : 0;
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        if (i == best) continue;
        const double cur = table.entries[i].coherence_norm + table.entries[i].exclusivity_norm;
        const double sec = table.entries[second].coherence_norm + table.entries[second].exclusivity_norm;
        if (cur > sec || (cur == sec && table.entries[i].k < table.entries[second].k)) {
            second = i;
        }
    }

    SelectionRationale r;
    const auto& win = table.entries[best];
    r.chosen_k = win.k;
    r.chosen_coherence_norm = win.coherence_norm;
    r.chosen_exclusivity_norm = win.exclusivity_norm;
    if (table.entries.size() > 1) {
        const auto& ru = table.entries[second];
        r.runner_up_k = ru.k;
        r.runner_up_coherence_norm = ru.coherence_norm;
        r.runner_up_exclusivity_norm = ru.exclusivity_norm;
    }
    r.summary = "chose K=" + std::to_string(r.chosen_k) +
                " (coherence_norm + exclusivity_norm = " +
                std::to_string(win.coherence_norm + win.exclusivity_norm) + ")";
    return r;
}

}  // namespace satkit
