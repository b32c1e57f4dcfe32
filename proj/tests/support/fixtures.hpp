// Shared synthetic fixtures for tests and the acceptance suite.
#pragma once

#include <cmath>
#include <vector>

#include "satkit/corpus.hpp"
#include "satkit/lda.hpp"
#include "satkit/rng.hpp"

namespace fixtures {

inline double sample_gamma(satkit::Rng& rng, double shape) {
    if (shape < 1.0) {
        const double u = rng.uniform();
        return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

inline std::vector<double> sample_dirichlet(satkit::Rng& rng, std::size_t k, double alpha) {
    std::vector<double> out(k);
    double sum = 0.0;
    for (auto& x : out) {
        x = sample_gamma(rng, alpha);
        sum += x;
    }
    for (auto& x : out) x /= sum;
    return out;
}

inline std::size_t sample_categorical(satkit::Rng& rng, const std::vector<double>& p) {
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        cum += p[i];
        if (u < cum) return i;
    }
    return p.size() - 1;
}

struct LdaFixture {
    satkit::BagCorpus corpus;
    std::vector<std::vector<double>> true_topic_word;  // K rows of length V
    std::vector<std::vector<double>> true_doc_topic;   // D rows of length K
};

// Draws an LDA corpus from known topic-word rows phi* ~ Dirichlet(beta) and
// document mixtures theta* ~ Dirichlet(alpha).
inline LdaFixture make_lda_fixture(int num_docs, int vocab, int k, int doc_len, double alpha,
                                   double beta, std::uint64_t seed) {
    satkit::Rng rng(seed);
    LdaFixture fx;
    fx.corpus.vocab_size = vocab;
    for (int t = 0; t < k; ++t) {
        fx.true_topic_word.push_back(sample_dirichlet(rng, static_cast<std::size_t>(vocab), beta));
    }
    for (int d = 0; d < num_docs; ++d) {
        const auto theta = sample_dirichlet(rng, static_cast<std::size_t>(k), alpha);
        fx.true_doc_topic.push_back(theta);
        std::vector<int> counts(static_cast<std::size_t>(vocab), 0);
        for (int i = 0; i < doc_len; ++i) {
            const std::size_t z = sample_categorical(rng, theta);
            const std::size_t v = sample_categorical(rng, fx.true_topic_word[z]);
            ++counts[v];
        }
        std::vector<satkit::BagEntry> doc;
        for (int v = 0; v < vocab; ++v) {
            if (counts[static_cast<std::size_t>(v)] > 0) {
                doc.push_back({v, counts[static_cast<std::size_t>(v)]});
            }
        }
        fx.corpus.docs.push_back(std::move(doc));
        fx.corpus.doc_ids.push_back("doc" + std::to_string(d));
        fx.corpus.total_tokens += doc_len;
    }
    return fx;
}

// Two topics over disjoint vocabulary halves; documents are pure one topic.
inline LdaFixture make_disjoint_fixture(int docs_per_topic, int vocab, int doc_len,
                                        std::uint64_t seed) {
    satkit::Rng rng(seed);
    LdaFixture fx;
    fx.corpus.vocab_size = vocab;
    const int half = vocab / 2;
    for (int t = 0; t < 2; ++t) {
        std::vector<double> row(static_cast<std::size_t>(vocab), 0.0);
        for (int v = t * half; v < (t + 1) * half; ++v) {
            row[static_cast<std::size_t>(v)] = 1.0 / half;
        }
        fx.true_topic_word.push_back(std::move(row));
    }
    for (int t = 0; t < 2; ++t) {
        for (int d = 0; d < docs_per_topic; ++d) {
            std::vector<int> counts(static_cast<std::size_t>(vocab), 0);
            for (int i = 0; i < doc_len; ++i) {
                ++counts[static_cast<std::size_t>(t * half +
                                                  static_cast<int>(rng.uniform_index(
                                                      static_cast<std::uint64_t>(half))))];
            }
            std::vector<satkit::BagEntry> doc;
            for (int v = 0; v < vocab; ++v) {
                if (counts[static_cast<std::size_t>(v)] > 0) {
                    doc.push_back({v, counts[static_cast<std::size_t>(v)]});
                }
            }
            fx.corpus.docs.push_back(std::move(doc));
            fx.corpus.doc_ids.push_back("d" + std::to_string(t) + "_" + std::to_string(d));
            fx.corpus.total_tokens += doc_len;
            std::vector<double> theta(2, 0.0);
            theta[static_cast<std::size_t>(t)] = 1.0;
            fx.true_doc_topic.push_back(std::move(theta));
        }
    }
    return fx;
}

// Greedy matching of estimated topics to true topics by minimum Hellinger
// distance; returns the matched distances.
inline std::vector<double> greedy_match_hellinger(const satkit::LdaModel& model,
                                                  const std::vector<std::vector<double>>& truth) {
    const int k = model.num_topics;
    auto hell = [&](int est, const std::vector<double>& ref) {
        double acc = 0.0;
        for (int v = 0; v < model.vocab_size; ++v) {
            const double d = std::sqrt(model.topic_word_at(est, v)) -
                             std::sqrt(ref[static_cast<std::size_t>(v)]);
            acc += d * d;
        }
        return std::sqrt(acc / 2.0);
    };
    std::vector<bool> est_used(static_cast<std::size_t>(k), false);
    std::vector<bool> true_used(truth.size(), false);
    std::vector<double> matched;
    for (int round = 0; round < k && matched.size() < truth.size(); ++round) {
        double best = 2.0;
        int bi = -1, bj = -1;
        for (int i = 0; i < k; ++i) {
            if (est_used[static_cast<std::size_t>(i)]) continue;
            for (std::size_t j = 0; j < truth.size(); ++j) {
                if (true_used[j]) continue;
                const double h = hell(i, truth[j]);
                if (h < best) {
                    best = h;
                    bi = i;
                    bj = static_cast<int>(j);
                }
            }
        }
        if (bi < 0) break;
        est_used[static_cast<std::size_t>(bi)] = true;
        true_used[static_cast<std::size_t>(bj)] = true;
        matched.push_back(best);
    }
    return matched;
}

}  // namespace fixtures
