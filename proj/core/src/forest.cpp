#include "satkit/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "satkit/log.hpp"
#include "satkit/parallel.hpp"
#include "satkit/rng.hpp"

namespace satkit {

namespace {

double gini(const std::array<int, kNumStars>& counts, int total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (int c : counts) {
        const double p = static_cast<double>(c) / total;
        g -= p * p;
    }
    return g;
}

struct NodeStats {
    std::array<int, kNumStars> counts{};
    double sum = 0.0;
    double sum_sq = 0.0;
    int n = 0;

    void add(int label) {
        ++counts[static_cast<std::size_t>(label - 1)];
        sum += label;
        sum_sq += static_cast<double>(label) * label;
        ++n;
    }
    double impurity(ForestMode mode) const {
        if (mode == ForestMode::classification) return gini(counts, n);
        if (n == 0) return 0.0;
        return sum_sq / n - (sum / n) * (sum / n);  // variance
    }
    bool pure() const {
        for (int c : counts) {
            if (c == n) return true;
        }
        return false;
    }
};

struct Builder {
    const std::vector<double>& x;
    std::size_t p;
    const std::vector<int>& y;
    const ForestConfig& config;
    int mtry;
    double root_n;
    Tree tree;
    std::vector<double> importance;  // per feature, this tree
    std::vector<int> rows;           // bootstrap row indices, partitioned in place
    Rng rng;

    int build(std::size_t begin, std::size_t end) {
        NodeStats stats;
        for (std::size_t i = begin; i < end; ++i) stats.add(y[static_cast<std::size_t>(rows[i])]);

        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        {
            auto& node = tree.nodes.back();
            node.class_counts = stats.counts;
            node.mean = stats.n > 0 ? stats.sum / stats.n : 0.0;
        }

        const int n = static_cast<int>(end - begin);
        if (stats.pure() || n < 2 * config.min_node) return node_index;

        // Per-node random feature subset (without replacement).
        std::vector<int> features(p);
        std::iota(features.begin(), features.end(), 0);
        for (int i = 0; i < mtry; ++i) {
            const std::size_t j = static_cast<std::size_t>(i) +
                                  rng.uniform_index(static_cast<std::uint64_t>(p - static_cast<std::size_t>(i)));
            std::swap(features[static_cast<std::size_t>(i)], features[j]);
        }

        const double node_impurity = stats.impurity(config.mode);
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = node_impurity;

        std::vector<std::pair<double, int>> values(static_cast<std::size_t>(n));
        for (int f = 0; f < mtry; ++f) {
            const int feature = features[static_cast<std::size_t>(f)];
            for (std::size_t i = begin; i < end; ++i) {
                const int row = rows[i];
                values[i - begin] = {x[static_cast<std::size_t>(row) * p + static_cast<std::size_t>(feature)],
                                     y[static_cast<std::size_t>(row)]};
            }
            std::sort(values.begin(), values.end());

            NodeStats left;
            NodeStats right = stats;
            for (int i = 0; i + 1 < n; ++i) {
                const int label = values[static_cast<std::size_t>(i)].second;
                left.add(label);
                --right.counts[static_cast<std::size_t>(label - 1)];
                right.sum -= label;
                right.sum_sq -= static_cast<double>(label) * label;
                --right.n;
                if (values[static_cast<std::size_t>(i)].first ==
                    values[static_cast<std::size_t>(i + 1)].first) {
                    continue;  // not a real cut point
                }
                if (left.n < config.min_node || right.n < config.min_node) continue;
                const double score = (left.n * left.impurity(config.mode) +
                                      right.n * right.impurity(config.mode)) / n;
                if (score < best_score - 1e-15) {
                    best_score = score;
                    best_feature = feature;
                    best_threshold = 0.5 * (values[static_cast<std::size_t>(i)].first +
                                            values[static_cast<std::size_t>(i + 1)].first);
                }
            }
        }

        if (best_feature < 0) return node_index;  // unsplittable

        const auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                        rows.begin() + static_cast<std::ptrdiff_t>(end), [&](int row) {
                                            return x[static_cast<std::size_t>(row) * p +
                                                     static_cast<std::size_t>(best_feature)] <= best_threshold;
                                        });
        const std::size_t split = static_cast<std::size_t>(mid - rows.begin());
        if (split == begin || split == end) return node_index;  // degenerate partition

        importance[static_cast<std::size_t>(best_feature)] +=
            (n / root_n) * (node_impurity - best_score);

        const int left_child = build(begin, split);
        const int right_child = build(split, end);
        auto& node = tree.nodes[static_cast<std::size_t>(node_index)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left_child;
        node.right = right_child;
        return node_index;
    }
};

int tree_predict_leaf(const Tree& tree, const double* row, std::size_t p) {
    int i = 0;
    for (;;) {
        const TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
        if (node.feature < 0) return i;
        i = row[node.feature] <= node.threshold ? node.left : node.right;
        (void)p;
    }
}

// Majority vote with ties to the lower star.
int vote_winner(const std::array<long long, kNumStars>& votes) {
    int best = 0;
    for (int c = 1; c < kNumStars; ++c) {
        if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
    }
    return best + 1;
}

}  // namespace

ForestModel fit_forest(const std::vector<double>& x, std::size_t n, std::size_t p,
                       const std::vector<int>& y, const ForestConfig& config) {
    if (n < 10) throw std::invalid_argument("fit_forest: need at least 10 rows");
    if (x.size() != n * p || y.size() != n) throw std::invalid_argument("fit_forest: shape mismatch");
    if (config.n_trees < 1) throw std::invalid_argument("fit_forest: n_trees >= 1");
    if (config.min_node < 1) throw std::invalid_argument("fit_forest: min_node >= 1");
    const int mtry = config.mtry > 0 ? config.mtry
                                     : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
    if (mtry > static_cast<int>(p)) throw std::invalid_argument("fit_forest: mtry > feature count");

    std::array<bool, kNumStars> seen{};
    std::size_t off_simplex = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] < 1 || y[i] > kNumStars) throw std::invalid_argument("fit_forest: label outside 1..5");
        seen[static_cast<std::size_t>(y[i] - 1)] = true;
        double row_sum = 0.0;
        for (std::size_t j = 0; j < p; ++j) row_sum += x[i * p + j];
        if (std::abs(row_sum - 1.0) > 1e-6) ++off_simplex;
    }
    if (off_simplex > 0) {
        warn("fit_forest: " + std::to_string(off_simplex) + " feature row(s) do not sum to 1");
    }
    for (int c = 0; c < kNumStars; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
            warn("fit_forest: star " + std::to_string(c + 1) +
                 " absent from training labels and can never be predicted");
        }
    }

    ForestModel model;
    model.config = config;
    model.config.mtry = mtry;
    model.num_features = static_cast<int>(p);
    model.trees.resize(static_cast<std::size_t>(config.n_trees));

    std::vector<std::vector<double>> tree_importance(static_cast<std::size_t>(config.n_trees));
    std::vector<std::vector<bool>> in_bag(static_cast<std::size_t>(config.n_trees));

    parallel_for(static_cast<std::size_t>(config.n_trees), config.threads, [&](std::size_t t) {
        Builder b{x, p, y, model.config, mtry, static_cast<double>(n), Tree{}, {}, {},
                  Rng(derive_seed(config.seed, t))};
        b.importance.assign(p, 0.0);
        b.rows.resize(n);
        in_bag[t].assign(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = b.rng.uniform_index(n);
            b.rows[i] = static_cast<int>(r);
            in_bag[t][r] = true;
        }
        b.build(0, n);
        model.trees[t] = std::move(b.tree);
        tree_importance[t] = std::move(b.importance);
    });

    // Out-of-bag votes.
    std::vector<std::array<long long, kNumStars>> votes(n);
    std::vector<bool> has_vote(n, false);
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            if (in_bag[t][i]) continue;
            const int leaf = tree_predict_leaf(model.trees[t], &x[i * p], p);
            const auto& counts = model.trees[t].nodes[static_cast<std::size_t>(leaf)].class_counts;
            int cls = 0;
            for (int c = 1; c < kNumStars; ++c) {
                if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(cls)]) cls = c;
            }
            ++votes[i][static_cast<std::size_t>(cls)];
            has_vote[i] = true;
        }
    }
    model.oob_prediction.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (has_vote[i]) model.oob_prediction[i] = vote_winner(votes[i]);
    }

    model.impurity_importance.assign(p, 0.0);
    for (const auto& imp : tree_importance) {
        for (std::size_t j = 0; j < p; ++j) model.impurity_importance[j] += imp[j];
    }
    double total = 0.0;
    for (double v : model.impurity_importance) total += v;
    if (total > 0.0) {
        for (double& v : model.impurity_importance) v /= total;
    }
    return model;
}

std::vector<int> predict(const ForestModel& model, const std::vector<double>& x, std::size_t n) {
    const std::size_t p = static_cast<std::size_t>(model.num_features);
    if (x.size() != n * p) throw std::invalid_argument("predict: feature count mismatch");
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<long long, kNumStars> votes{};
        for (const auto& tree : model.trees) {
            const int leaf = tree_predict_leaf(tree, &x[i * p], p);
            const auto& counts = tree.nodes[static_cast<std::size_t>(leaf)].class_counts;
            int cls = 0;
            for (int c = 1; c < kNumStars; ++c) {
                if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(cls)]) cls = c;
            }
            ++votes[static_cast<std::size_t>(cls)];
        }
        out[i] = vote_winner(votes);
    }
    return out;
}

std::vector<double> predict_numeric(const ForestModel& model, const std::vector<double>& x,
                                    std::size_t n) {
    const std::size_t p = static_cast<std::size_t>(model.num_features);
    if (x.size() != n * p) throw std::invalid_argument("predict_numeric: feature count mismatch");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& tree : model.trees) {
            const int leaf = tree_predict_leaf(tree, &x[i * p], p);
            sum += tree.nodes[static_cast<std::size_t>(leaf)].mean;
        }
        out[i] = sum / static_cast<double>(model.trees.size());
    }
    return out;
}

std::vector<FeatureImportance> importance_ranking(const ForestModel& model) {
    std::vector<FeatureImportance> out(static_cast<std::size_t>(model.num_features));
    for (int j = 0; j < model.num_features; ++j) {
        out[static_cast<std::size_t>(j)].feature = j;
        out[static_cast<std::size_t>(j)].importance = model.impurity_importance[static_cast<std::size_t>(j)];
    }
    std::stable_sort(out.begin(), out.end(), [](const FeatureImportance& a, const FeatureImportance& b) {
        return a.importance > b.importance;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i) + 1;
    return out;
}

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (const auto& row : counts) {
        for (long long v : row) t += v;
    }
    return t;
}

long long ConfusionMatrix::row_sum(int predicted) const {
    long long t = 0;
    for (long long v : counts[static_cast<std::size_t>(predicted)]) t += v;
    return t;
}

long long ConfusionMatrix::col_sum(int truth) const {
    long long t = 0;
    for (const auto& row : counts) t += row[static_cast<std::size_t>(truth)];
    return t;
}

ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size()) {
        throw std::invalid_argument("confusion: label vectors differ in length");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] < 1 || predicted[i] > kNumStars || truth[i] < 1 || truth[i] > kNumStars) {
            throw std::invalid_argument("confusion: label outside 1..5");
        }
        ++cm.counts[static_cast<std::size_t>(predicted[i] - 1)][static_cast<std::size_t>(truth[i] - 1)];
    }
    return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
    const long long total = cm.total();
    if (total == 0) throw std::invalid_argument("metrics: empty confusion matrix");

    Metrics m;
    long long trace = 0;
    for (int c = 0; c < kNumStars; ++c) {
        trace += cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    }
    m.accuracy = static_cast<double>(trace) / static_cast<double>(total);

    for (int c = 0; c < kNumStars; ++c) {
        auto& cls = m.per_class[static_cast<std::size_t>(c)];
        const long long diag = cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        const long long row = cm.row_sum(c);
        const long long col = cm.col_sum(c);
        if (row == 0 || col == 0) cls.zero_margin = true;
        cls.precision = row > 0 ? static_cast<double>(diag) / static_cast<double>(row) : 0.0;
        cls.recall = col > 0 ? static_cast<double>(diag) / static_cast<double>(col) : 0.0;
        cls.f1 = (cls.precision + cls.recall) > 0.0
                     ? 2.0 * cls.precision * cls.recall / (cls.precision + cls.recall)
                     : 0.0;
        m.macro_precision += cls.precision;
        m.macro_recall += cls.recall;
        m.macro_f1 += cls.f1;
    }
    m.macro_precision /= kNumStars;
    m.macro_recall /= kNumStars;
    m.macro_f1 /= kNumStars;
    return m;
}

}  // namespace satkit
