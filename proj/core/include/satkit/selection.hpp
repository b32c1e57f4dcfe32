#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satkit/corpus.hpp"
#include "satkit/lda.hpp"

namespace satkit {

struct TopicScores {
    std::vector<double> per_topic;
    double mean = 0.0;
};

// UMass semantic coherence. For topic t with top-M terms v_1..v_M ordered by
// probability:
//   C(t) = sum_{m=2..M} sum_{l<m} log((D(v_m, v_l) + 1) / D(v_l))
// where D counts documents containing the term(s). Top terms always occur in
// the corpus, so D(v_l) >= 1.
TopicScores semantic_coherence(const LdaModel& model, const BagCorpus& corpus, int m = 10);

// FREX exclusivity with weight w. For term v in topic k:
//   excl(k,v) = phi_kv / sum_j phi_jv
//   frex(k,v) = 1 / (w / ecdf_k(excl(k,v)) + (1-w) / ecdf_k(phi_kv))
// with ECDFs taken over all terms within topic k. A topic's score is the
// mean frex over its top-M terms; the model score the mean over topics.
// Throws for a single-topic model.
TopicScores exclusivity(const LdaModel& model, int m = 10, double w = 0.7);

struct ModelScore {
    int k = 0;
    double coherence_raw = 0.0;
    double exclusivity_raw = 0.0;
    double coherence_norm = 0.0;   // raw / cross-model mean
    double exclusivity_norm = 0.0;
    std::vector<double> coherence_per_topic;
    std::vector<double> exclusivity_per_topic;
};

struct SweepConfig {
    int k_min = 3;
    int k_max = 100;
    int step = 1;
    int top_words = 10;
    double frex_weight = 0.7;
    LdaHyperparams hyper;   // per-model seed derived from hyper.seed and K
    unsigned threads = 0;
};

struct SweepTable {
    std::vector<ModelScore> entries;  // ascending K
    SweepConfig config;
    // (K, error) for fits that failed; populated instead of aborting so the
    // partial table can still be persisted.
    std::vector<std::pair<int, std::string>> failures;
};

// Fits one model per K in [k_min, k_max] stepping by `step`, scores each,
// and normalizes both metrics by their cross-model means. Models are
// independent (seed derived per K) and may fit in parallel.
SweepTable sweep(const BagCorpus& corpus, const SweepConfig& config);

struct SelectionRationale {
    int chosen_k = 0;
    double chosen_coherence_norm = 0.0;
    double chosen_exclusivity_norm = 0.0;
    int runner_up_k = 0;
    double runner_up_coherence_norm = 0.0;
    double runner_up_exclusivity_norm = 0.0;
    std::string summary;
};

// argmax of coherence_norm + exclusivity_norm; ties go to the smaller K.
SelectionRationale select_k(const SweepTable& table);

// Cross-model score normalization: values are divided by their mean so the
// normalized mean is 1. A metric whose mean is negative (UMass coherence) is
// reflected (2 - raw/mean) so that larger still means better; the mean stays
// exactly 1.0 in double arithmetic either way.
std::vector<double> normalize_by_mean(const std::vector<double>& values);

}  // namespace satkit
