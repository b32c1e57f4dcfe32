#include "satkit/topic_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

#include "satkit/cluster.hpp"
#include "satkit/log.hpp"
#include "satkit/parallel.hpp"
#include "satkit/rng.hpp"

namespace satkit {

std::vector<double> prevalence(const LdaModel& model, const BagCorpus& corpus) {
    if (static_cast<int>(corpus.docs.size()) != model.num_docs) {
        throw std::invalid_argument("prevalence: corpus does not match model");
    }
    std::vector<double> out(static_cast<std::size_t>(model.num_topics), 0.0);
    double total = 0.0;
    for (int d = 0; d < model.num_docs; ++d) {
        const double len = static_cast<double>(corpus.doc_length(static_cast<std::size_t>(d)));
        total += len;
        for (int k = 0; k < model.num_topics; ++k) {
            out[static_cast<std::size_t>(k)] += len * model.doc_topic_at(d, k);
        }
    }
    if (total <= 0.0) throw std::invalid_argument("prevalence: corpus has no tokens");
    for (auto& x : out) x /= total;
    return out;
}

std::vector<double> similarity_matrix(const LdaModel& model, unsigned threads) {
    const int K = model.num_topics;
    if (K < 1) throw std::invalid_argument("similarity_matrix: empty model");
    const std::size_t V = static_cast<std::size_t>(model.vocab_size);
    std::vector<double> s(static_cast<std::size_t>(K) * K, 0.0);
    parallel_for(static_cast<std::size_t>(K), threads, [&](std::size_t i) {
        s[i * K + i] = 1.0;
        const std::span<const double> row_i(&model.topic_word[i * V], V);
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(K); ++j) {
            const std::span<const double> row_j(&model.topic_word[j * V], V);
            const double sim = 1.0 - hellinger(row_i, row_j);
            s[i * K + j] = sim;
            s[j * K + i] = sim;
        }
    });
    return s;
}

TopicGraph build_graph(const std::vector<double>& similarity, int num_topics,
                       const std::vector<double>& prev, double edge_quantile) {
    const std::size_t K = static_cast<std::size_t>(num_topics);
    if (similarity.size() != K * K || prev.size() != K) {
        throw std::invalid_argument("build_graph: shape mismatch");
    }
    if (edge_quantile < 0.0 || edge_quantile >= 1.0) {
        throw std::invalid_argument("build_graph: require 0 <= edge_quantile < 1");
    }

    TopicGraph g;
    g.nodes.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        g.nodes[k].topic = static_cast<int>(k);
        g.nodes[k].label = "topic" + std::to_string(k + 1);
        g.nodes[k].prevalence = prev[k];
        g.nodes[k].community = static_cast<int>(k);
    }
    if (K < 2) return g;

    std::vector<double> offdiag;
    offdiag.reserve(K * (K - 1) / 2);
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = i + 1; j < K; ++j) offdiag.push_back(similarity[i * K + j]);
    }

    // Threshold: linear-interpolated empirical quantile of the off-diagonal
    // values; edges must lie strictly above it. Quantile 0 keeps everything.
    double threshold = -1.0;
    if (edge_quantile > 0.0) {
        std::vector<double> sorted = offdiag;
        std::sort(sorted.begin(), sorted.end());
        const double h = edge_quantile * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(h);
        threshold = sorted[lo];
        if (lo + 1 < sorted.size()) threshold += (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    }
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = i + 1; j < K; ++j) {
            const double w = similarity[i * K + j];
            if (w > threshold) {
                g.edges.push_back({static_cast<int>(i), static_cast<int>(j), w});
            }
        }
    }
    if (g.edges.empty() && edge_quantile > 0.0) {
        warn("build_graph: no edge above the " + std::to_string(edge_quantile) + " quantile");
    }
    return g;
}

double modularity(const TopicGraph& graph, const std::vector<int>& community, double resolution) {
    const std::size_t n = graph.nodes.size();
    if (community.size() != n) throw std::invalid_argument("modularity: assignment size mismatch");
    std::vector<double> degree(n, 0.0);
    double two_m = 0.0;
    for (const auto& e : graph.edges) {
        degree[static_cast<std::size_t>(e.source)] += e.weight;
        degree[static_cast<std::size_t>(e.target)] += e.weight;
        two_m += 2.0 * e.weight;
    }
    if (two_m <= 0.0) return 0.0;

    const int num_comm = 1 + *std::max_element(community.begin(), community.end());
    std::vector<double> in(static_cast<std::size_t>(num_comm), 0.0);
    std::vector<double> tot(static_cast<std::size_t>(num_comm), 0.0);
    for (const auto& e : graph.edges) {
        if (community[static_cast<std::size_t>(e.source)] == community[static_cast<std::size_t>(e.target)]) {
            in[static_cast<std::size_t>(community[static_cast<std::size_t>(e.source)])] += 2.0 * e.weight;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        tot[static_cast<std::size_t>(community[i])] += degree[i];
    }
    double q = 0.0;
    for (int c = 0; c < num_comm; ++c) {
        q += in[static_cast<std::size_t>(c)] / two_m -
             resolution * (tot[static_cast<std::size_t>(c)] / two_m) * (tot[static_cast<std::size_t>(c)] / two_m);
    }
    return q;
}

namespace {

// Weighted graph for the Louvain phases. A self-loop of weight w is stored
// once in adj with value 2w so that row sums equal graph-theoretic degrees.
struct WGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;
    std::vector<double> degree;
    double two_m = 0.0;
};

// One round of local moving; returns the node->community map (dense ids).
std::vector<int> local_move(const WGraph& g, Rng& rng, double resolution, bool& improved) {
    const std::size_t n = g.n;
    std::vector<int> comm(n);
    std::iota(comm.begin(), comm.end(), 0);
    std::vector<double> tot(g.degree);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    improved = false;
    std::vector<double> comm_weight(n, 0.0);
    std::vector<int> touched;
    bool moved = true;
    while (moved) {
        moved = false;
        for (int i : order) {
            const int c_old = comm[static_cast<std::size_t>(i)];
            // Weights from i to each adjacent community (self-loops excluded:
            // they follow the node and cancel out of the comparison).
            touched.clear();
            for (const auto& [j, w] : g.adj[static_cast<std::size_t>(i)]) {
                if (j == i) continue;
                const int c = comm[static_cast<std::size_t>(j)];
                if (comm_weight[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
                comm_weight[static_cast<std::size_t>(c)] += w;
            }
            tot[static_cast<std::size_t>(c_old)] -= g.degree[static_cast<std::size_t>(i)];

            const double k_i = g.degree[static_cast<std::size_t>(i)];
            auto gain = [&](int c) {
                return comm_weight[static_cast<std::size_t>(c)] -
                       resolution * tot[static_cast<std::size_t>(c)] * k_i / g.two_m;
            };
            int best = c_old;
            double best_gain = gain(c_old);
            for (int c : touched) {
                if (c == c_old) continue;
                const double cur = gain(c);
                if (cur > best_gain + 1e-12) {
                    best_gain = cur;
                    best = c;
                }
            }
            tot[static_cast<std::size_t>(best)] += k_i;
            comm[static_cast<std::size_t>(i)] = best;
            if (best != c_old) {
                moved = true;
                improved = true;
            }
            for (int c : touched) comm_weight[static_cast<std::size_t>(c)] = 0.0;
            comm_weight[static_cast<std::size_t>(c_old)] = 0.0;
        }
    }
    // Dense renumbering in node order.
    std::vector<int> remap(n, -1);
    int next = 0;
    for (auto& c : comm) {
        if (remap[static_cast<std::size_t>(c)] < 0) remap[static_cast<std::size_t>(c)] = next++;
        c = remap[static_cast<std::size_t>(c)];
    }
    return comm;
}

WGraph aggregate(const WGraph& g, const std::vector<int>& comm) {
    const int nc = 1 + *std::max_element(comm.begin(), comm.end());
    WGraph out;
    out.n = static_cast<std::size_t>(nc);
    out.adj.resize(out.n);
    out.degree.assign(out.n, 0.0);
    std::vector<std::vector<double>> weight(out.n, std::vector<double>(out.n, 0.0));
    for (std::size_t i = 0; i < g.n; ++i) {
        for (const auto& [j, w] : g.adj[i]) {
            weight[static_cast<std::size_t>(comm[i])][static_cast<std::size_t>(comm[static_cast<std::size_t>(j)])] += w;
        }
    }
    for (int a = 0; a < nc; ++a) {
        for (int b = 0; b < nc; ++b) {
            if (weight[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] > 0.0) {
                out.adj[static_cast<std::size_t>(a)].push_back(
                    {b, weight[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]});
            }
        }
        for (const auto& [b, w] : out.adj[static_cast<std::size_t>(a)]) {
            (void)b;
            out.degree[static_cast<std::size_t>(a)] += w;
        }
        out.two_m += out.degree[static_cast<std::size_t>(a)];
    }
    return out;
}

}  // namespace

CommunityPartition louvain(const TopicGraph& graph, double resolution, std::uint64_t seed) {
    const std::size_t n = graph.nodes.size();
    if (n == 0) throw std::invalid_argument("louvain: empty graph");

    CommunityPartition part;
    part.community.resize(n);
    std::iota(part.community.begin(), part.community.end(), 0);

    if (graph.edges.empty()) {
        part.num_communities = static_cast<int>(n);
        part.modularity = 0.0;
        return part;
    }

    WGraph w;
    w.n = n;
    w.adj.resize(n);
    w.degree.assign(n, 0.0);
    for (const auto& e : graph.edges) {
        w.adj[static_cast<std::size_t>(e.source)].push_back({e.target, e.weight});
        w.adj[static_cast<std::size_t>(e.target)].push_back({e.source, e.weight});
        w.degree[static_cast<std::size_t>(e.source)] += e.weight;
        w.degree[static_cast<std::size_t>(e.target)] += e.weight;
        w.two_m += 2.0 * e.weight;
    }

    Rng rng(seed);
    std::vector<int> assignment(part.community);
    for (int level = 0;; ++level) {
        bool improved = false;
        const std::vector<int> comm = local_move(w, rng, resolution, improved);
        if (!improved && level > 0) break;
        for (auto& a : assignment) {
            a = comm[static_cast<std::size_t>(a)];
        }
        const int nc = 1 + *std::max_element(comm.begin(), comm.end());
        if (static_cast<std::size_t>(nc) == w.n) break;  // nothing merged
        w = aggregate(w, comm);
    }

    part.community = assignment;
    part.num_communities = 1 + *std::max_element(assignment.begin(), assignment.end());
    part.modularity = modularity(graph, assignment, resolution);
    return part;
}

PolarityResult assign_polarity(const CommunityPartition& partition, const LdaModel& model,
                               const std::vector<std::optional<double>>& doc_mean_rating,
                               double band) {
    const int K = model.num_topics;
    if (static_cast<int>(partition.community.size()) != K) {
        throw std::invalid_argument("assign_polarity: partition does not match model");
    }
    if (static_cast<int>(doc_mean_rating.size()) != model.num_docs) {
        throw std::invalid_argument("assign_polarity: ratings do not match model documents");
    }

    std::vector<int> rated;
    for (int d = 0; d < model.num_docs; ++d) {
        if (doc_mean_rating[static_cast<std::size_t>(d)]) rated.push_back(d);
    }
    if (rated.empty()) {
        throw std::invalid_argument("assign_polarity: no rated reviews");
    }

    double r_mean = 0.0;
    for (int d : rated) r_mean += *doc_mean_rating[static_cast<std::size_t>(d)];
    r_mean /= static_cast<double>(rated.size());
    double r_var = 0.0;
    for (int d : rated) {
        const double dr = *doc_mean_rating[static_cast<std::size_t>(d)] - r_mean;
        r_var += dr * dr;
    }

    PolarityResult result;
    result.topic_correlation.assign(static_cast<std::size_t>(K), 0.0);
    result.community_polarity.assign(static_cast<std::size_t>(partition.num_communities),
                                     Polarity::neutral);
    result.topic_polarity.assign(static_cast<std::size_t>(K), Polarity::neutral);

    if (r_var <= 0.0) {
        warn("assign_polarity: ratings have zero variance, labelling everything neutral");
        return result;
    }

    for (int k = 0; k < K; ++k) {
        double t_mean = 0.0;
        for (int d : rated) t_mean += model.doc_topic_at(d, k);
        t_mean /= static_cast<double>(rated.size());
        double cov = 0.0, t_var = 0.0;
        for (int d : rated) {
            const double dt = model.doc_topic_at(d, k) - t_mean;
            const double dr = *doc_mean_rating[static_cast<std::size_t>(d)] - r_mean;
            cov += dt * dr;
            t_var += dt * dt;
        }
        result.topic_correlation[static_cast<std::size_t>(k)] =
            t_var > 0.0 ? cov / std::sqrt(t_var * r_var) : 0.0;
    }

    std::vector<double> sum(static_cast<std::size_t>(partition.num_communities), 0.0);
    std::vector<int> count(static_cast<std::size_t>(partition.num_communities), 0);
    for (int k = 0; k < K; ++k) {
        const std::size_t c = static_cast<std::size_t>(partition.community[static_cast<std::size_t>(k)]);
        sum[c] += result.topic_correlation[static_cast<std::size_t>(k)];
        ++count[c];
    }
    for (int c = 0; c < partition.num_communities; ++c) {
        if (count[static_cast<std::size_t>(c)] == 0) continue;
        const double mean = sum[static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(c)];
        if (mean > band) {
            result.community_polarity[static_cast<std::size_t>(c)] = Polarity::positive;
        } else if (mean < -band) {
            result.community_polarity[static_cast<std::size_t>(c)] = Polarity::negative;
        }
    }
    for (int k = 0; k < K; ++k) {
        result.topic_polarity[static_cast<std::size_t>(k)] =
            result.community_polarity[static_cast<std::size_t>(
                partition.community[static_cast<std::size_t>(k)])];
    }
    return result;
}

void annotate_graph(TopicGraph& graph, const CommunityPartition& partition,
                    const PolarityResult& polarity) {
    if (graph.nodes.size() != partition.community.size()) {
        throw std::invalid_argument("annotate_graph: partition size mismatch");
    }
    for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
        graph.nodes[k].community = partition.community[k];
        graph.nodes[k].polarity = polarity.topic_polarity[k];
    }
}

}  // namespace satkit
