#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "satkit/corpus.hpp"
#include "satkit/lda.hpp"
#include "satkit/polarity.hpp"

namespace satkit {

struct TopicNode {
    int topic = 0;
    std::string label;           // display label, defaults to "topic<k+1>"
    double prevalence = 0.0;
    int community = 0;
    Polarity polarity = Polarity::neutral;
};

struct TopicEdge {
    int source = 0;
    int target = 0;  // source < target
    double weight = 0.0;
};

struct TopicGraph {
    std::vector<TopicNode> nodes;
    std::vector<TopicEdge> edges;
};

// Token-weighted share of the corpus attributed to each topic:
//   prevalence_k = sum_d len(d) * theta_dk / sum_d len(d).
std::vector<double> prevalence(const LdaModel& model, const BagCorpus& corpus);

// K x K similarity, S_ij = 1 - Hellinger(topic_word_i, topic_word_j).
// Row-major, symmetric, unit diagonal.
std::vector<double> similarity_matrix(const LdaModel& model, unsigned threads = 0);

// Keeps edges strictly above the given quantile of the off-diagonal
// similarity values (upper triangle, linear-interpolated quantile).
// quantile 0 keeps every edge. Warns when no edge survives.
TopicGraph build_graph(const std::vector<double>& similarity, int num_topics,
                       const std::vector<double>& prevalence, double edge_quantile = 0.90);

struct CommunityPartition {
    std::vector<int> community;  // dense ids, 0-based
    double modularity = 0.0;
    int num_communities = 0;
};

// Two-phase Louvain on weighted modularity
//   Q = (1/2m) sum_ij [A_ij - resolution * k_i k_j / 2m] delta(c_i, c_j).
// Node visit order is shuffled by seed. An edgeless graph yields singleton
// communities with Q = 0.
CommunityPartition louvain(const TopicGraph& graph, double resolution = 1.0,
                           std::uint64_t seed = 1);

// Weighted modularity of an assignment on the graph (same convention).
double modularity(const TopicGraph& graph, const std::vector<int>& community,
                  double resolution = 1.0);

struct PolarityResult {
    std::vector<double> topic_correlation;      // Pearson r per topic
    std::vector<Polarity> community_polarity;   // indexed by community id
    std::vector<Polarity> topic_polarity;       // node polarity via community
};

// Correlates each topic's document proportions with the documents' mean
// star rating (documents without ratings are skipped). A community is
// positive/negative when the mean correlation of its topics exceeds +band /
// falls below -band, else neutral. Zero-variance ratings give all-neutral
// with a warning.
PolarityResult assign_polarity(const CommunityPartition& partition, const LdaModel& model,
                               const std::vector<std::optional<double>>& doc_mean_rating,
                               double band = 0.02);

// Applies a partition + polarity result to the graph's node attributes.
void annotate_graph(TopicGraph& graph, const CommunityPartition& partition,
                    const PolarityResult& polarity);

// --- exports (graph_io.cpp) ---

void write_graphml(const TopicGraph& graph, std::ostream& out);
// Reads the subset of GraphML produced by write_graphml (round-trip use).
TopicGraph read_graphml(std::istream& in);

void write_nodes_csv(const TopicGraph& graph, std::ostream& out);
void write_edges_csv(const TopicGraph& graph, std::ostream& out);
void write_dot(const TopicGraph& graph, std::ostream& out);

}  // namespace satkit
