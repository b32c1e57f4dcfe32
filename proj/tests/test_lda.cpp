#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "satkit/lda.hpp"
#include "satkit/log.hpp"

using namespace satkit;

namespace {

BagCorpus tiny_corpus() {
    BagCorpus c;
    c.docs = {{{0, 2}, {1, 1}}, {{1, 2}, {2, 1}}, {{0, 1}, {2, 2}}};
    c.doc_ids = {"a", "b", "c"};
    c.total_tokens = 9;
    c.vocab_size = 3;
    return c;
}

LdaHyperparams quick_hyper(std::uint64_t seed, int iterations = 200, int burn_in = 100) {
    LdaHyperparams h;
    h.iterations = iterations;
    h.burn_in = burn_in;
    h.seed = seed;
    return h;
}

}  // namespace

TEST_CASE("K=1 degenerates to smoothed corpus frequencies") {
    const auto corpus = tiny_corpus();
    LdaHyperparams h = quick_hyper(3);
    h.alpha = 0.5;
    const auto model = fit_lda(corpus, 1, h);
    // counts: term0 = 3, term1 = 3, term2 = 3, N = 9, V = 3
    for (int v = 0; v < 3; ++v) {
        CHECK(model.topic_word_at(0, v) ==
              doctest::Approx((3.0 + h.beta) / (9.0 + 3.0 * h.beta)).epsilon(1e-12));
    }
    for (int d = 0; d < 3; ++d) {
        CHECK(model.doc_topic_at(d, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("two disjoint-vocabulary topics are recovered") {
    const auto fx = fixtures::make_disjoint_fixture(40, 20, 30, 11);
    LdaHyperparams h = quick_hyper(17, 400, 200);
    h.alpha = 0.1;
    const auto model = fit_lda(fx.corpus, 2, h);
    // Each fitted topic should put at least 95% of its mass on one half.
    for (int k = 0; k < 2; ++k) {
        double lo = 0.0, hi = 0.0;
        for (int v = 0; v < 10; ++v) lo += model.topic_word_at(k, v);
        for (int v = 10; v < 20; ++v) hi += model.topic_word_at(k, v);
        CHECK(std::max(lo, hi) >= 0.95);
    }
}

TEST_CASE("count tables are conserved after every sweep") {
    const auto fx = fixtures::make_lda_fixture(30, 25, 3, 20, 0.5, 0.1, 5);
    std::vector<long long> doc_len(fx.corpus.docs.size());
    for (std::size_t d = 0; d < fx.corpus.docs.size(); ++d) {
        doc_len[d] = fx.corpus.doc_length(d);
    }
    int sweeps_checked = 0;
    LdaFitOptions opts;
    opts.sweep_hook = [&](int, const LdaCounts& counts) {
        long long total = 0;
        for (int d = 0; d < counts.num_docs; ++d) {
            long long len = 0;
            for (int k = 0; k < counts.num_topics; ++k) {
                len += counts.doc_topic[static_cast<std::size_t>(d) * counts.num_topics + k];
            }
            REQUIRE(len == doc_len[static_cast<std::size_t>(d)]);
        }
        for (int k = 0; k < counts.num_topics; ++k) {
            long long nk = 0;
            for (int v = 0; v < counts.vocab_size; ++v) {
                nk += counts.topic_term[static_cast<std::size_t>(k) * counts.vocab_size + v];
            }
            REQUIRE(nk == counts.topic_total[static_cast<std::size_t>(k)]);
            total += nk;
        }
        REQUIRE(total == fx.corpus.total_tokens);
        ++sweeps_checked;
    };
    fit_lda(fx.corpus, 3, quick_hyper(7, 50, 25), opts);
    CHECK(sweeps_checked == 50);
}

TEST_CASE("topic_word and doc_topic rows are stochastic") {
    const auto fx = fixtures::make_lda_fixture(25, 30, 4, 15, 0.4, 0.05, 21);
    const auto model = fit_lda(fx.corpus, 4, quick_hyper(23, 120, 60));
    for (int k = 0; k < model.num_topics; ++k) {
        double sum = 0.0;
        for (int v = 0; v < model.vocab_size; ++v) {
            CHECK(model.topic_word_at(k, v) >= 0.0);
            sum += model.topic_word_at(k, v);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int d = 0; d < model.num_docs; ++d) {
        double sum = 0.0;
        for (int k = 0; k < model.num_topics; ++k) {
            CHECK(model.doc_topic_at(d, k) >= 0.0);
            sum += model.doc_topic_at(d, k);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("same seed gives bit-identical estimates") {
    const auto fx = fixtures::make_lda_fixture(20, 20, 3, 12, 0.3, 0.1, 2);
    const auto a = fit_lda(fx.corpus, 3, quick_hyper(99, 80, 40));
    const auto b = fit_lda(fx.corpus, 3, quick_hyper(99, 80, 40));
    CHECK(a.topic_word == b.topic_word);
    CHECK(a.doc_topic == b.doc_topic);
    const auto c = fit_lda(fx.corpus, 3, quick_hyper(100, 80, 40));
    CHECK(a.topic_word != c.topic_word);
}

TEST_CASE("fit input validation") {
    const auto corpus = tiny_corpus();
    CHECK_THROWS_AS(fit_lda(corpus, 0, quick_hyper(1)), std::invalid_argument);
    // more topics than tokens
    CHECK_THROWS_WITH_AS(fit_lda(corpus, 10, quick_hyper(1)), doctest::Contains("tokens"),
                         std::invalid_argument);
    LdaHyperparams bad = quick_hyper(1);
    bad.burn_in = bad.iterations;
    CHECK_THROWS_AS(fit_lda(corpus, 2, bad), std::invalid_argument);
    // K >= V warns but fits
    std::vector<std::string> warnings;
    set_warn_handler([&](const std::string& w) { warnings.push_back(w); });
    CHECK_NOTHROW(fit_lda(corpus, 4, quick_hyper(1, 20, 10)));
    set_warn_handler({});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("vocabulary") != std::string::npos);
}

TEST_CASE("top_words ordering and tie-breaks") {
    LdaModel model;
    model.num_topics = 2;
    model.vocab_size = 4;
    model.num_docs = 0;

    SUBCASE("one-hot row") {
        model.topic_word = {0.0, 0.0, 1.0, 0.0, 0.25, 0.25, 0.25, 0.25};
        const auto top = top_words(model, 0, 1);
        REQUIRE(top.size() == 1);
        CHECK(top[0].first == 2);
        CHECK(top[0].second == doctest::Approx(1.0));
    }
    SUBCASE("uniform row breaks ties by term index") {
        model.topic_word = {0.25, 0.25, 0.25, 0.25, 0.1, 0.2, 0.3, 0.4};
        const auto top = top_words(model, 0, 3);
        REQUIRE(top.size() == 3);
        CHECK(top[0].first == 0);
        CHECK(top[1].first == 1);
        CHECK(top[2].first == 2);
    }
    SUBCASE("descending probabilities") {
        model.topic_word = {0.1, 0.4, 0.2, 0.3, 0.25, 0.25, 0.25, 0.25};
        const auto top = top_words(model, 0, 4);
        CHECK(top[0].first == 1);
        CHECK(top[1].first == 3);
        CHECK(top[2].first == 2);
        CHECK(top[3].first == 0);
    }
    SUBCASE("bad topic index") {
        model.topic_word.assign(8, 0.125);
        CHECK_THROWS_AS(top_words(model, 2, 1), std::out_of_range);
    }
}

TEST_CASE("infer_document folds new documents into a fitted model") {
    const auto fx = fixtures::make_disjoint_fixture(40, 20, 30, 31);
    LdaHyperparams h = quick_hyper(37, 300, 150);
    h.alpha = 0.1;
    const auto model = fit_lda(fx.corpus, 2, h);

    SUBCASE("pure doc from one vocabulary half loads one topic") {
        std::vector<BagEntry> doc;
        for (int v = 0; v < 10; ++v) doc.push_back({v, 3});
        const auto theta = infer_document(model, doc, 100, 5);
        CHECK(*std::max_element(theta.begin(), theta.end()) >= 0.9);
        double sum = 0.0;
        for (double t : theta) sum += t;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("empty document gives uniform and warns") {
        std::vector<std::string> warnings;
        set_warn_handler([&](const std::string& w) { warnings.push_back(w); });
        const auto theta = infer_document(model, {}, 50, 5);
        set_warn_handler({});
        CHECK(warnings.size() == 1);
        for (double t : theta) CHECK(t == doctest::Approx(0.5));
    }
    SUBCASE("training document re-infers close to its training mixture") {
        const auto theta = infer_document(model, fx.corpus.docs[0], 200, 5);
        double l1 = 0.0;
        for (int k = 0; k < 2; ++k) {
            l1 += std::abs(theta[static_cast<std::size_t>(k)] - model.doc_topic_at(0, k));
        }
        CHECK(l1 <= 0.2);
    }
    SUBCASE("determinism by seed") {
        const auto a = infer_document(model, fx.corpus.docs[1], 100, 42);
        const auto b = infer_document(model, fx.corpus.docs[1], 100, 42);
        CHECK(a == b);
    }
}

TEST_CASE("log_likelihood analytic cases") {
    SUBCASE("single doc, single term, K=1") {
        BagCorpus c;
        c.docs = {{{0, 1}}};
        c.doc_ids = {"a"};
        c.total_tokens = 1;
        c.vocab_size = 1;
        LdaHyperparams h = quick_hyper(1, 20, 10);
        h.beta = 1e-9;
        const auto model = fit_lda(c, 1, h);
        CHECK(log_likelihood(model, c) == doctest::Approx(0.0).epsilon(1e-8));
    }
    SUBCASE("uniform model equals -log V") {
        LdaModel model;
        model.num_topics = 2;
        model.vocab_size = 5;
        model.num_docs = 2;
        model.topic_word.assign(10, 0.2);
        model.doc_topic.assign(4, 0.5);
        BagCorpus c;
        c.docs = {{{0, 2}, {3, 1}}, {{4, 4}}};
        c.doc_ids = {"a", "b"};
        c.total_tokens = 7;
        c.vocab_size = 5;
        CHECK(log_likelihood(model, c) == doctest::Approx(-std::log(5.0)).epsilon(1e-12));
    }
}

TEST_CASE("likelihood improves over burn-in within a noise band") {
    const auto fx = fixtures::make_lda_fixture(60, 40, 3, 25, 0.2, 0.05, 13);
    std::vector<double> trace;
    LdaFitOptions opts;
    opts.sweep_hook = [&](int, const LdaCounts& counts) {
        LdaModel snapshot;
        snapshot.num_topics = counts.num_topics;
        snapshot.vocab_size = counts.vocab_size;
        snapshot.num_docs = counts.num_docs;
        snapshot.topic_word = estimate_topic_word(counts, 0.05);
        snapshot.doc_topic = estimate_doc_topic(counts, 0.2);
        trace.push_back(log_likelihood(snapshot, fx.corpus));
    };
    LdaHyperparams h = quick_hyper(3, 120, 60);
    h.alpha = 0.2;
    h.beta = 0.05;
    fit_lda(fx.corpus, 3, h, opts);
    REQUIRE(trace.size() == 120);
    CHECK(trace.back() > trace.front());
    for (std::size_t i = 1; i < trace.size(); ++i) {
        // Non-strict improvement, tolerating 0.5% sampler noise.
        CHECK(trace[i] >= trace[i - 1] - 0.005 * std::abs(trace[i - 1]));
    }
}

TEST_CASE("document order exchangeability with fixed estimates") {
    const auto fx = fixtures::make_lda_fixture(20, 20, 3, 15, 0.3, 0.1, 41);
    const auto model = fit_lda(fx.corpus, 3, quick_hyper(43, 60, 30));
    const double base = log_likelihood(model, fx.corpus);

    // Reverse document order and permute theta rows to match.
    BagCorpus reversed = fx.corpus;
    std::reverse(reversed.docs.begin(), reversed.docs.end());
    std::reverse(reversed.doc_ids.begin(), reversed.doc_ids.end());
    LdaModel permuted = model;
    for (int d = 0; d < model.num_docs; ++d) {
        for (int k = 0; k < 3; ++k) {
            permuted.doc_topic[static_cast<std::size_t>(d) * 3 + k] =
                model.doc_topic_at(model.num_docs - 1 - d, k);
        }
    }
    CHECK(log_likelihood(permuted, reversed) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("empty documents keep uniform mixtures") {
    BagCorpus c;
    c.docs = {{{0, 3}, {1, 2}}, {}, {{2, 4}}};
    c.doc_ids = {"a", "empty", "b"};
    c.total_tokens = 9;
    c.vocab_size = 3;
    const auto model = fit_lda(c, 2, quick_hyper(9, 40, 20));
    CHECK(model.doc_topic_at(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(model.doc_topic_at(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}
