#include "satkit/lda.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "satkit/log.hpp"
#include "satkit/rng.hpp"

namespace satkit {

namespace {

void normalize_rows(std::vector<double>& m, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) sum += m[r * cols + c];
        if (sum > 0.0) {
            for (std::size_t c = 0; c < cols; ++c) m[r * cols + c] /= sum;
        }
    }
}

}  // namespace

LdaModel fit_lda(const BagCorpus& corpus, int num_topics, const LdaHyperparams& hyper,
                 const LdaFitOptions& options) {
    const int K = num_topics;
    int V = corpus.vocab_size;
    if (V <= 0) {
        for (const auto& doc : corpus.docs) {
            for (const auto& e : doc) V = std::max(V, e.term + 1);
        }
    }
    const int D = static_cast<int>(corpus.docs.size());
    if (K < 1) throw std::invalid_argument("fit_lda: need at least one topic");
    if (corpus.total_tokens == 0) throw std::invalid_argument("fit_lda: degenerate corpus");
    if (static_cast<long long>(K) > corpus.total_tokens) {
        throw std::invalid_argument("fit_lda: more topics than tokens");
    }
    if (hyper.iterations <= hyper.burn_in || hyper.burn_in < 0) {
        throw std::invalid_argument("fit_lda: require iterations > burn_in >= 0");
    }
    if (K >= V) {
        warn("fit_lda: topic count " + std::to_string(K) + " >= vocabulary size " + std::to_string(V));
    }
    const double alpha = hyper.resolved_alpha(K);
    const double beta = hyper.beta;

    // Flatten token stream: per document, each bag entry expands to `count`
    // individually assigned tokens.
    std::vector<int> token_doc;
    std::vector<int> token_term;
    token_doc.reserve(static_cast<std::size_t>(corpus.total_tokens));
    token_term.reserve(static_cast<std::size_t>(corpus.total_tokens));
    for (int d = 0; d < D; ++d) {
        for (const auto& e : corpus.docs[d]) {
            for (int c = 0; c < e.count; ++c) {
                token_doc.push_back(d);
                token_term.push_back(e.term);
            }
        }
    }
    const std::size_t n_tokens = token_doc.size();

    std::vector<long long> n_dk(static_cast<std::size_t>(D) * K, 0);
    std::vector<long long> n_kv(static_cast<std::size_t>(K) * V, 0);
    std::vector<long long> n_k(K, 0);
    std::vector<int> z(n_tokens);

    Rng rng(hyper.seed);
    for (std::size_t i = 0; i < n_tokens; ++i) {
        const int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(K)));
        z[i] = k;
        ++n_dk[static_cast<std::size_t>(token_doc[i]) * K + k];
        ++n_kv[static_cast<std::size_t>(k) * V + token_term[i]];
        ++n_k[k];
    }

    const double v_beta = V * beta;
    std::vector<double> weights(K);
    std::vector<double> phi_acc;
    std::vector<double> theta_acc;
    int samples = 0;

    const LdaCounts counts{n_dk, n_kv, n_k, D, K, V};
    for (int sweep = 1; sweep <= hyper.iterations; ++sweep) {
        for (std::size_t i = 0; i < n_tokens; ++i) {
            const int d = token_doc[i];
            const int v = token_term[i];
            const int old_k = z[i];
            --n_dk[static_cast<std::size_t>(d) * K + old_k];
            --n_kv[static_cast<std::size_t>(old_k) * V + v];
            --n_k[old_k];

            double total = 0.0;
            const long long* dk = &n_dk[static_cast<std::size_t>(d) * K];
            for (int k = 0; k < K; ++k) {
                const double w = (dk[k] + alpha) *
                                 (n_kv[static_cast<std::size_t>(k) * V + v] + beta) /
                                 (n_k[k] + v_beta);
                weights[k] = w;
                total += w;
            }
            const double u = rng.uniform() * total;
            int new_k = 0;
            double cum = weights[0];
            while (cum < u && new_k + 1 < K) {
                cum += weights[++new_k];
            }
            z[i] = new_k;
            ++n_dk[static_cast<std::size_t>(d) * K + new_k];
            ++n_kv[static_cast<std::size_t>(new_k) * V + v];
            ++n_k[new_k];
        }

        if (sweep > hyper.burn_in && (sweep - hyper.burn_in - 1) % hyper.sample_lag == 0) {
            if (phi_acc.empty()) {
                phi_acc.assign(n_kv.size(), 0.0);
                theta_acc.assign(n_dk.size(), 0.0);
            }
            for (int k = 0; k < K; ++k) {
                const double denom = n_k[k] + v_beta;
                for (int v = 0; v < V; ++v) {
                    phi_acc[static_cast<std::size_t>(k) * V + v] +=
                        (n_kv[static_cast<std::size_t>(k) * V + v] + beta) / denom;
                }
            }
            for (int d = 0; d < D; ++d) {
                const double len = static_cast<double>(corpus.doc_length(static_cast<std::size_t>(d)));
                const double denom = len + K * alpha;
                for (int k = 0; k < K; ++k) {
                    theta_acc[static_cast<std::size_t>(d) * K + k] +=
                        (n_dk[static_cast<std::size_t>(d) * K + k] + alpha) / denom;
                }
            }
            ++samples;
        }
        if (options.sweep_hook) options.sweep_hook(sweep, counts);
    }

    LdaModel model;
    model.num_topics = K;
    model.vocab_size = V;
    model.num_docs = D;
    model.alpha = alpha;
    model.beta = beta;
    model.hyper = hyper;
    model.topic_word = std::move(phi_acc);
    model.doc_topic = std::move(theta_acc);
    for (auto& x : model.topic_word) x /= samples;
    for (auto& x : model.doc_topic) x /= samples;
    normalize_rows(model.topic_word, static_cast<std::size_t>(K), static_cast<std::size_t>(V));
    normalize_rows(model.doc_topic, static_cast<std::size_t>(D), static_cast<std::size_t>(K));
    model.count_doc_topic = std::move(n_dk);
    model.count_topic_term = std::move(n_kv);
    model.count_topic = std::move(n_k);
    return model;
}

std::vector<std::pair<int, double>> top_words(const LdaModel& model, int topic, int m) {
    if (topic < 0 || topic >= model.num_topics) {
        throw std::out_of_range("top_words: topic index out of range");
    }
    m = std::min(m, model.vocab_size);
    std::vector<int> order(static_cast<std::size_t>(model.vocab_size));
    for (int v = 0; v < model.vocab_size; ++v) order[static_cast<std::size_t>(v)] = v;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return model.topic_word_at(topic, a) > model.topic_word_at(topic, b);
    });
    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        out.emplace_back(order[static_cast<std::size_t>(i)], model.topic_word_at(topic, order[static_cast<std::size_t>(i)]));
    }
    return out;
}

std::vector<double> infer_document(const LdaModel& model, const std::vector<BagEntry>& doc,
                                   int fold_in_iters, std::uint64_t seed) {
    const int K = model.num_topics;
    long long len = 0;
    for (const auto& e : doc) {
        if (e.term < 0 || e.term >= model.vocab_size) {
            throw std::out_of_range("infer_document: term index outside model vocabulary");
        }
        len += e.count;
    }
    if (len == 0) {
        warn("infer_document: document has no in-vocabulary terms, returning uniform mixture");
        return std::vector<double>(static_cast<std::size_t>(K), 1.0 / K);
    }

    std::vector<int> terms;
    terms.reserve(static_cast<std::size_t>(len));
    for (const auto& e : doc) {
        for (int c = 0; c < e.count; ++c) terms.push_back(e.term);
    }
    std::vector<long long> n_k(static_cast<std::size_t>(K), 0);
    std::vector<int> z(terms.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const int k = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(K)));
        z[i] = k;
        ++n_k[static_cast<std::size_t>(k)];
    }

    const double alpha = model.alpha;
    std::vector<double> weights(static_cast<std::size_t>(K));
    std::vector<double> acc(static_cast<std::size_t>(K), 0.0);
    int samples = 0;
    const int sample_from = fold_in_iters / 2;  // average the last half
    for (int it = 1; it <= fold_in_iters; ++it) {
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const int v = terms[i];
            --n_k[static_cast<std::size_t>(z[i])];
            double total = 0.0;
            for (int k = 0; k < K; ++k) {
                const double w = (n_k[static_cast<std::size_t>(k)] + alpha) * model.topic_word_at(k, v);
                weights[static_cast<std::size_t>(k)] = w;
                total += w;
            }
            const double u = rng.uniform() * total;
            int new_k = 0;
            double cum = weights[0];
            while (cum < u && new_k + 1 < K) {
                cum += weights[static_cast<std::size_t>(++new_k)];
            }
            z[i] = new_k;
            ++n_k[static_cast<std::size_t>(new_k)];
        }
        if (it > sample_from) {
            const double denom = static_cast<double>(len) + K * alpha;
            for (int k = 0; k < K; ++k) {
                acc[static_cast<std::size_t>(k)] += (n_k[static_cast<std::size_t>(k)] + alpha) / denom;
            }
            ++samples;
        }
    }
    double sum = 0.0;
    for (auto& x : acc) {
        x /= samples;
        sum += x;
    }
    for (auto& x : acc) x /= sum;
    return acc;
}

double log_likelihood(const LdaModel& model, const BagCorpus& corpus) {
    double total = 0.0;
    long long n = 0;
    for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
        for (const auto& e : corpus.docs[d]) {
            double p = 0.0;
            for (int k = 0; k < model.num_topics; ++k) {
                p += model.doc_topic_at(static_cast<int>(d), k) * model.topic_word_at(k, e.term);
            }
            total += e.count * std::log(p);
            n += e.count;
        }
    }
    return n > 0 ? total / static_cast<double>(n) : 0.0;
}

std::vector<double> estimate_topic_word(const LdaCounts& counts, double beta) {
    std::vector<double> phi(counts.topic_term.size());
    const double v_beta = counts.vocab_size * beta;
    for (int k = 0; k < counts.num_topics; ++k) {
        const double denom = counts.topic_total[static_cast<std::size_t>(k)] + v_beta;
        for (int v = 0; v < counts.vocab_size; ++v) {
            const std::size_t i = static_cast<std::size_t>(k) * counts.vocab_size + v;
            phi[i] = (counts.topic_term[i] + beta) / denom;
        }
    }
    return phi;
}

std::vector<double> estimate_doc_topic(const LdaCounts& counts, double alpha) {
    std::vector<double> theta(counts.doc_topic.size());
    for (int d = 0; d < counts.num_docs; ++d) {
        long long len = 0;
        for (int k = 0; k < counts.num_topics; ++k) {
            len += counts.doc_topic[static_cast<std::size_t>(d) * counts.num_topics + k];
        }
        const double denom = static_cast<double>(len) + counts.num_topics * alpha;
        for (int k = 0; k < counts.num_topics; ++k) {
            const std::size_t i = static_cast<std::size_t>(d) * counts.num_topics + k;
            theta[i] = (counts.doc_topic[i] + alpha) / denom;
        }
    }
    return theta;
}

}  // namespace satkit
