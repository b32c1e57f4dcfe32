#include "satkit/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "satkit/log.hpp"
#include "satkit/parallel.hpp"
#include "satkit/rng.hpp"

namespace satkit {

double hellinger(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("hellinger: length mismatch");
    }
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw std::invalid_argument("hellinger: negative probability");
        }
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6) {
        throw std::invalid_argument("hellinger: inputs must sum to 1");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
        acc += d * d;
    }
    return std::sqrt(acc) / std::sqrt(2.0);
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

struct LloydResult {
    std::vector<int> assignment;
    std::vector<double> centroids;
    std::vector<int> sizes;
    std::vector<double> inertia_trace;
    double inertia = std::numeric_limits<double>::infinity();
    int iterations = 0;
    int repairs = 0;
};

LloydResult run_restart(const std::vector<double>& points, std::size_t n, std::size_t dim,
                        const KmeansConfig& config, std::uint64_t seed) {
    const std::size_t k = static_cast<std::size_t>(config.k);
    Rng rng(seed);

    // Farthest-first: random first centroid, then repeatedly the point with
    // the largest distance to the chosen set (ties -> lowest index).
    std::vector<std::size_t> chosen;
    chosen.push_back(rng.uniform_index(n));
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    while (chosen.size() < k) {
        const double* last = &points[chosen.back() * dim];
        std::size_t far_idx = 0;
        double far_dist = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            min_dist[i] = std::min(min_dist[i], sq_dist(&points[i * dim], last, dim));
            if (min_dist[i] > far_dist) {
                far_dist = min_dist[i];
                far_idx = i;
            }
        }
        chosen.push_back(far_idx);
    }

    LloydResult r;
    r.centroids.resize(k * dim);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(&points[chosen[c] * dim], dim, &r.centroids[c * dim]);
    }
    r.assignment.assign(n, 0);
    r.sizes.assign(k, 0);

    double prev_inertia = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < config.max_iters; ++iter) {
        // Assignment step (ties -> lowest centroid index).
        double inertia = 0.0;
        std::fill(r.sizes.begin(), r.sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(&points[i * dim], &r.centroids[0], dim);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = sq_dist(&points[i * dim], &r.centroids[c * dim], dim);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            r.assignment[i] = best;
            ++r.sizes[static_cast<std::size_t>(best)];
            inertia += best_d;
        }
        if (inertia > prev_inertia + 1e-9) {
            throw std::logic_error("kmeans: inertia increased across an iteration");
        }
        r.inertia_trace.push_back(inertia);
        r.iterations = iter + 1;
        const bool converged = prev_inertia - inertia < 1e-9;
        prev_inertia = inertia;
        r.inertia = inertia;
        if (converged) break;

        // Update step.
        std::fill(r.centroids.begin(), r.centroids.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = static_cast<std::size_t>(r.assignment[i]);
            for (std::size_t j = 0; j < dim; ++j) r.centroids[c * dim + j] += points[i * dim + j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (r.sizes[c] > 0) {
                for (std::size_t j = 0; j < dim; ++j) r.centroids[c * dim + j] /= r.sizes[c];
            } else {
                // Re-seed an empty cluster from the point farthest from its
                // current centroid.
                std::size_t far_idx = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t a = static_cast<std::size_t>(r.assignment[i]);
                    const double d = sq_dist(&points[i * dim], &r.centroids[a * dim], dim);
                    if (d > far_d) {
                        far_d = d;
                        far_idx = i;
                    }
                }
                std::copy_n(&points[far_idx * dim], dim, &r.centroids[c * dim]);
                ++r.repairs;
                // Inertia may rise after a repair; reset the baseline.
                prev_inertia = std::numeric_limits<double>::infinity();
            }
        }
    }
    return r;
}

}  // namespace

ClusterModel kmeans(const std::vector<double>& points, std::size_t n, std::size_t dim,
                    const KmeansConfig& config) {
    if (n == 0 || dim == 0) throw std::invalid_argument("kmeans: empty input");
    if (points.size() != n * dim) throw std::invalid_argument("kmeans: bad matrix shape");
    if (config.k < 1 || static_cast<std::size_t>(config.k) > n) {
        throw std::invalid_argument("kmeans: require 1 <= k <= n");
    }
    if (config.restarts < 1) throw std::invalid_argument("kmeans: restarts >= 1");

    std::vector<LloydResult> results(static_cast<std::size_t>(config.restarts));
    parallel_for(results.size(), config.threads, [&](std::size_t r) {
        results[r] = run_restart(points, n, dim, config, derive_seed(config.seed, r));
    });

    std::size_t best = 0;
    for (std::size_t r = 1; r < results.size(); ++r) {
        if (results[r].inertia < results[best].inertia) best = r;
    }
    if (results[best].repairs > 0) {
        warn("kmeans: repaired " + std::to_string(results[best].repairs) + " empty cluster(s)");
    }

    ClusterModel model;
    model.assignment = std::move(results[best].assignment);
    model.centroids = std::move(results[best].centroids);
    model.inertia = results[best].inertia;
    model.iterations_used = results[best].iterations;
    model.restart_chosen = static_cast<int>(best);
    model.inertia_trace = std::move(results[best].inertia_trace);
    model.empty_cluster_repairs = results[best].repairs;
    model.sizes = std::move(results[best].sizes);
    return model;
}

std::vector<double> hellinger_matrix(const std::vector<double>& centroids, std::size_t k,
                                     std::size_t dim) {
    if (centroids.size() != k * dim) throw std::invalid_argument("hellinger_matrix: bad shape");

    // Clamp tiny negatives from floating averaging and renormalize each row.
    std::vector<double> simplex(centroids.size());
    for (std::size_t c = 0; c < k; ++c) {
        double sum = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = std::max(0.0, centroids[c * dim + j]);
            simplex[c * dim + j] = v;
            sum += v;
        }
        if (sum <= 0.0) {
            throw std::invalid_argument("hellinger_matrix: all-zero centroid row " + std::to_string(c));
        }
        for (std::size_t j = 0; j < dim; ++j) simplex[c * dim + j] /= sum;
    }

    std::vector<double> out(k * k, 0.0);
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            const double h = hellinger(std::span(simplex).subspan(a * dim, dim),
                                       std::span(simplex).subspan(b * dim, dim));
            out[a * k + b] = h;
            out[b * k + a] = h;
        }
    }
    return out;
}

std::vector<std::vector<TermScore>> tfidf_labels(const std::vector<int>& assignment, int k,
                                                 const BagCorpus& corpus, int top_n) {
    if (assignment.size() != corpus.docs.size()) {
        throw std::invalid_argument("tfidf_labels: assignment does not cover corpus");
    }
    const int V = corpus.vocab_size > 0 ? corpus.vocab_size : [&] {
        int v = 0;
        for (const auto& d : corpus.docs)
            for (const auto& e : d) v = std::max(v, e.term + 1);
        return v;
    }();

    std::vector<std::vector<long long>> counts(static_cast<std::size_t>(k),
                                               std::vector<long long>(static_cast<std::size_t>(V), 0));
    std::vector<long long> totals(static_cast<std::size_t>(k), 0);
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        const int c = assignment[d];
        if (c < 0 || c >= k) throw std::out_of_range("tfidf_labels: cluster id out of range");
        for (const auto& e : corpus.docs[d]) {
            counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(e.term)] += e.count;
            totals[static_cast<std::size_t>(c)] += e.count;
        }
    }
    std::vector<int> clusters_with_term(static_cast<std::size_t>(V), 0);
    for (int c = 0; c < k; ++c) {
        for (int v = 0; v < V; ++v) {
            if (counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)] > 0) {
                ++clusters_with_term[static_cast<std::size_t>(v)];
            }
        }
    }

    std::vector<std::vector<TermScore>> out(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        if (totals[static_cast<std::size_t>(c)] == 0) continue;
        std::vector<TermScore> scored;
        for (int v = 0; v < V; ++v) {
            const long long cnt = counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)];
            if (cnt == 0) continue;
            const double tf = static_cast<double>(cnt) / static_cast<double>(totals[static_cast<std::size_t>(c)]);
            const double idf = std::log(static_cast<double>(k) /
                                        static_cast<double>(clusters_with_term[static_cast<std::size_t>(v)]));
            const double score = tf * idf;
            if (score > 0.0) scored.push_back({v, score});
        }
        std::sort(scored.begin(), scored.end(), [](const TermScore& a, const TermScore& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.term < b.term;
        });
        if (static_cast<int>(scored.size()) > top_n) scored.resize(static_cast<std::size_t>(top_n));
        out[static_cast<std::size_t>(c)] = std::move(scored);
    }
    return out;
}

std::vector<Polarity> cluster_polarity(const std::vector<int>& assignment, int k,
                                       const std::vector<double>& theta, int num_topics,
                                       const std::vector<Polarity>& topic_polarity) {
    if (static_cast<int>(topic_polarity.size()) != num_topics) {
        throw std::invalid_argument("cluster_polarity: polarity map incomplete");
    }
    const std::size_t n = assignment.size();
    if (theta.size() != n * static_cast<std::size_t>(num_topics)) {
        throw std::invalid_argument("cluster_polarity: theta shape mismatch");
    }
    std::vector<std::array<double, 3>> mass(static_cast<std::size_t>(k), {0.0, 0.0, 0.0});
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = static_cast<std::size_t>(assignment[i]);
        ++sizes[c];
        for (int t = 0; t < num_topics; ++t) {
            mass[c][static_cast<std::size_t>(topic_polarity[static_cast<std::size_t>(t)])] +=
                theta[i * static_cast<std::size_t>(num_topics) + static_cast<std::size_t>(t)];
        }
    }
    std::vector<Polarity> out(static_cast<std::size_t>(k), Polarity::neutral);
    for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] == 0) continue;
        const auto& m = mass[static_cast<std::size_t>(c)];
        const double pos = m[static_cast<std::size_t>(Polarity::positive)];
        const double neg = m[static_cast<std::size_t>(Polarity::negative)];
        const double neu = m[static_cast<std::size_t>(Polarity::neutral)];
        if (pos > neg && pos > neu) {
            out[static_cast<std::size_t>(c)] = Polarity::positive;
        } else if (neg > pos && neg > neu) {
            out[static_cast<std::size_t>(c)] = Polarity::negative;
        } else {
            out[static_cast<std::size_t>(c)] = Polarity::neutral;
        }
    }
    return out;
}

}  // namespace satkit
