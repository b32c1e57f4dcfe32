#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "satkit/corpus.hpp"

namespace satkit {

struct LdaHyperparams {
    std::optional<double> alpha;  // symmetric document-topic prior; default 50/K
    double beta = 0.01;           // symmetric topic-word prior
    int iterations = 1000;
    int burn_in = 500;
    int sample_lag = 10;  // estimate from every sample_lag-th post-burn-in sweep
    std::uint64_t seed = 1;

    double resolved_alpha(int k) const { return alpha ? *alpha : 50.0 / k; }
};

// Count tables exposed to the per-sweep hook. Layouts: doc_topic D*K,
// topic_term K*V, topic_total K, all row-major.
struct LdaCounts {
    const std::vector<long long>& doc_topic;
    const std::vector<long long>& topic_term;
    const std::vector<long long>& topic_total;
    int num_docs;
    int num_topics;
    int vocab_size;
};

struct LdaFitOptions {
    // Called after every sweep (1-based). Used by tests to check count
    // conservation and to trace likelihood; keep it cheap in production.
    std::function<void(int sweep, const LdaCounts&)> sweep_hook;
};

// Fitted topic model. topic_word rows (K x V) and doc_topic rows (D x K) are
// probability distributions estimated by averaging smoothed count tables
// over the retained post-burn-in sweeps.
struct LdaModel {
    int num_topics = 0;
    int vocab_size = 0;
    int num_docs = 0;
    std::vector<double> topic_word;
    std::vector<double> doc_topic;
    std::vector<long long> count_doc_topic;   // final-state n_{d,k}
    std::vector<long long> count_topic_term;  // final-state n_{k,v}
    std::vector<long long> count_topic;       // final-state n_k
    double alpha = 0.0;                       // resolved value
    double beta = 0.0;
    LdaHyperparams hyper;
    std::uint64_t vocab_fingerprint = 0;

    double topic_word_at(int k, int v) const { return topic_word[static_cast<std::size_t>(k) * vocab_size + v]; }
    double doc_topic_at(int d, int k) const { return doc_topic[static_cast<std::size_t>(d) * num_topics + k]; }
};

// Collapsed Gibbs sampling. A token's topic is resampled from
//   P(z = k) proportional to (n_dk + alpha) * (n_kv + beta) / (n_k + V*beta)
// with the token's own assignment removed from the counts. Deterministic for
// a given seed; empty documents are skipped during sampling and end up with
// uniform doc_topic rows. Throws if K < 1 or K exceeds the token count;
// warns (and proceeds) when K >= V.
LdaModel fit_lda(const BagCorpus& corpus, int num_topics, const LdaHyperparams& hyper = {},
                 const LdaFitOptions& options = {});

// Top M terms of a topic by probability, descending; ties broken by lower
// term index. Returns (term index, probability).
std::vector<std::pair<int, double>> top_words(const LdaModel& model, int topic, int m);

// Folds a new document into a fitted model: Gibbs over the document's
// assignments with topic_word held fixed, doc_topic averaged over the last
// half of the iterations. Entries must use model vocabulary indices (drop
// OOV terms before calling). An empty document yields a uniform row and a
// warning.
std::vector<double> infer_document(const LdaModel& model, const std::vector<BagEntry>& doc,
                                   int fold_in_iters, std::uint64_t seed);

// Mean per-token log \sum_k theta_dk * phi_kv over the corpus; <= 0.
double log_likelihood(const LdaModel& model, const BagCorpus& corpus);

// Convenience used by tests/tools: current smoothed estimates from raw counts.
std::vector<double> estimate_topic_word(const LdaCounts& counts, double beta);
std::vector<double> estimate_doc_topic(const LdaCounts& counts, double alpha);

}  // namespace satkit
