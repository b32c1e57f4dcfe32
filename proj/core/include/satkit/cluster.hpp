#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satkit/corpus.hpp"
#include "satkit/polarity.hpp"

namespace satkit {

// Hellinger distance between two probability vectors:
//   H(p, q) = (1/sqrt(2)) * ||sqrt(p) - sqrt(q)||_2, in [0, 1].
// Inputs must be non-negative and sum to 1 within 1e-6.
double hellinger(std::span<const double> p, std::span<const double> q);

struct KmeansConfig {
    int k = 100;
    int restarts = 10;
    int max_iters = 100;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct ClusterModel {
    std::vector<int> assignment;      // per point
    std::vector<double> centroids;    // k x dim, row-major
    double inertia = 0.0;             // sum of squared distances to centroids
    int iterations_used = 0;
    int restart_chosen = 0;
    std::vector<double> inertia_trace;  // per Lloyd iteration of the winner
    int empty_cluster_repairs = 0;
    std::vector<int> sizes;           // per cluster

    int k() const { return static_cast<int>(sizes.size()); }
};

// Lloyd's k-means with farthest-first initialization: the first centroid is
// a seeded random point, each next the point maximizing the minimum distance
// to those already chosen. Runs `restarts` independent inits and returns the
// one with the lowest inertia. Inertia is checked to be non-increasing every
// iteration. An emptied cluster is re-seeded from the point farthest from
// its centroid and counted in empty_cluster_repairs.
ClusterModel kmeans(const std::vector<double>& points, std::size_t n, std::size_t dim,
                    const KmeansConfig& config);

// Pairwise Hellinger distances between centroid rows. Rows are clamped to
// non-negative and renormalized before the distance; an all-zero row is an
// error. Returns k x k row-major, symmetric, zero diagonal.
std::vector<double> hellinger_matrix(const std::vector<double>& centroids, std::size_t k,
                                     std::size_t dim);

struct TermScore {
    int term = 0;
    double score = 0.0;  // tf-idf
};

// TF-IDF labels, treating each cluster's concatenated bag of terms as one
// pseudo-document: tf = count in cluster / cluster token total, idf =
// ln(k / number of clusters containing the term). Top terms by tf*idf,
// zero scores excluded, ties broken by term index. Empty clusters get empty
// lists.
std::vector<std::vector<TermScore>> tfidf_labels(const std::vector<int>& assignment, int k,
                                                 const BagCorpus& corpus, int top_n = 10);

// Dominant polarity per cluster: mean doc-topic mass aggregated by topic
// polarity; argmax of the three masses, a positive/negative tie -> neutral.
// theta is n x num_topics row-major aligned with `assignment`.
std::vector<Polarity> cluster_polarity(const std::vector<int>& assignment, int k,
                                       const std::vector<double>& theta, int num_topics,
                                       const std::vector<Polarity>& topic_polarity);

}  // namespace satkit
