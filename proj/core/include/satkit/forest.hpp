#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace satkit {

// Star labels run 1..5 throughout.
inline constexpr int kNumStars = 5;

enum class ForestMode {
    classification,  // Gini impurity, majority vote
    regression,      // variance impurity, mean prediction (stars as numeric)
};

struct ForestConfig {
    int n_trees = 500;
    int mtry = 0;      // features sampled per node; 0 = floor(sqrt(p))
    int min_node = 5;  // minimum rows in any leaf
    std::uint64_t seed = 1;
    unsigned threads = 0;
    ForestMode mode = ForestMode::classification;
};

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<int, kNumStars> class_counts{};  // training rows in the node
    double mean = 0.0;                          // regression leaf value
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestModel {
    std::vector<Tree> trees;
    ForestConfig config;
    int num_features = 0;
    // Majority vote over the trees whose bootstrap missed the row; empty when
    // every tree saw the row. Ties go to the lower star.
    std::vector<std::optional<int>> oob_prediction;
    // Mean decrease in node impurity per feature, normalized to sum to 1.
    std::vector<double> impurity_importance;
};

// CART-style forest on bootstrapped rows with per-node feature subsampling
// and exhaustive threshold search. X is n x p row-major (topic proportions;
// rows are expected to sum to ~1 and trigger a warning otherwise), y holds
// stars in 1..5. Classes absent from y are warned about; they can never be
// predicted.
ForestModel fit_forest(const std::vector<double>& x, std::size_t n, std::size_t p,
                       const std::vector<int>& y, const ForestConfig& config = {});

// Majority vote across all trees; ties go to the lower star.
std::vector<int> predict(const ForestModel& model, const std::vector<double>& x, std::size_t n);

// Regression-mode forecast (mean of tree means).
std::vector<double> predict_numeric(const ForestModel& model, const std::vector<double>& x,
                                    std::size_t n);

struct FeatureImportance {
    int feature = 0;
    double importance = 0.0;
    int rank = 0;  // 1-based, descending importance, ties by feature index
};

// Descending impurity-decrease ranking from a fitted model.
std::vector<FeatureImportance> importance_ranking(const ForestModel& model);

// 5x5 contingency counts; rows = predicted star, columns = true star.
struct ConfusionMatrix {
    std::array<std::array<long long, kNumStars>, kNumStars> counts{};

    long long total() const;
    long long row_sum(int predicted) const;   // 0-based index
    long long col_sum(int truth) const;
};

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool zero_margin = false;  // a zero row/column margin forced a 0 metric
};

struct Metrics {
    double accuracy = 0.0;
    std::array<ClassMetrics, kNumStars> per_class{};
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// accuracy = trace/total, precision = diagonal over the predicted-row
// margin, recall = diagonal over the true-column margin, f1 their harmonic
// mean. Zero margins yield 0 with the zero_margin flag set.
Metrics metrics(const ConfusionMatrix& cm);

}  // namespace satkit
