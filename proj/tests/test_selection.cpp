#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "satkit/selection.hpp"

using namespace satkit;

namespace {

LdaModel model_from_rows(const std::vector<std::vector<double>>& rows) {
    LdaModel m;
    m.num_topics = static_cast<int>(rows.size());
    m.vocab_size = static_cast<int>(rows[0].size());
    for (const auto& r : rows) m.topic_word.insert(m.topic_word.end(), r.begin(), r.end());
    return m;
}

BagCorpus corpus_from_docs(std::vector<std::vector<BagEntry>> docs, int vocab) {
    BagCorpus c;
    c.docs = std::move(docs);
    c.vocab_size = vocab;
    for (std::size_t d = 0; d < c.docs.size(); ++d) {
        c.doc_ids.push_back("d" + std::to_string(d));
        for (const auto& e : c.docs[d]) c.total_tokens += e.count;
    }
    return c;
}

}  // namespace

TEST_CASE("coherence of a single-document corpus with both top words") {
    // One document holds both top words: C = log((1+1)/1) = log 2.
    const auto model = model_from_rows({{0.6, 0.4}});
    const auto corpus = corpus_from_docs({{{0, 1}, {1, 1}}}, 2);
    const auto scores = semantic_coherence(model, corpus, 2);
    CHECK(scores.per_topic[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("coherence of never co-occurring top words is zero") {
    const auto model = model_from_rows({{0.6, 0.4}});
    const auto corpus = corpus_from_docs({{{0, 1}}, {{1, 1}}}, 2);
    const auto scores = semantic_coherence(model, corpus, 2);
    CHECK(scores.per_topic[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("coherence matches the brute-force pair-counting oracle") {
    const auto fx = fixtures::make_lda_fixture(20, 15, 4, 12, 0.4, 0.2, 77);
    LdaHyperparams h;
    h.iterations = 60;
    h.burn_in = 30;
    h.seed = 78;
    const auto model = fit_lda(fx.corpus, 4, h);
    for (int m : {2, 5, 10}) {
        const auto scores = semantic_coherence(model, fx.corpus, m);
        for (int t = 0; t < 4; ++t) {
            const double expected = oracle::umass_coherence(model, fx.corpus, t, m);
            CHECK(scores.per_topic[static_cast<std::size_t>(t)] ==
                  doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("coherence upper bound") {
    const auto fx = fixtures::make_lda_fixture(15, 12, 3, 10, 0.5, 0.3, 79);
    LdaHyperparams h;
    h.iterations = 40;
    h.burn_in = 20;
    h.seed = 80;
    const auto model = fit_lda(fx.corpus, 3, h);
    const int m = 10;
    const auto scores = semantic_coherence(model, fx.corpus, m);
    const int top = std::min(m, model.vocab_size);
    const double bound = top * (top - 1) / 2.0 * std::log(2.0);
    for (double c : scores.per_topic) CHECK(c <= bound);
}

TEST_CASE("exclusivity limits") {
    SUBCASE("disjoint one-hot topics score 1") {
        const auto model = model_from_rows({{1.0, 0.0}, {0.0, 1.0}});
        const auto scores = exclusivity(model, 1, 0.7);
        CHECK(scores.per_topic[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(scores.per_topic[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("identical topics score below disjoint ones") {
        const auto same = model_from_rows({{0.5, 0.5}, {0.5, 0.5}});
        const auto scores = exclusivity(same, 1, 0.7);
        CHECK(scores.mean < 1.0);
    }
    SUBCASE("single topic is an error") {
        const auto model = model_from_rows({{0.5, 0.5}});
        CHECK_THROWS_WITH_AS(exclusivity(model, 1, 0.7), doctest::Contains("single topic"),
                             std::invalid_argument);
    }
    SUBCASE("weight must lie strictly inside (0,1)") {
        const auto model = model_from_rows({{1.0, 0.0}, {0.0, 1.0}});
        CHECK_THROWS_AS(exclusivity(model, 1, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(exclusivity(model, 1, 1.0), std::invalid_argument);
    }
}

TEST_CASE("exclusivity matches the direct-formula oracle") {
    satkit::Rng rng(123);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::vector<double>> rows;
        for (int k = 0; k < 3; ++k) {
            rows.push_back(fixtures::sample_dirichlet(rng, 5, 0.8));
        }
        const auto model = model_from_rows(rows);
        for (int m : {2, 4}) {
            const auto scores = exclusivity(model, m, 0.7);
            for (int t = 0; t < 3; ++t) {
                const double expected = oracle::frex_exclusivity(model, t, m, 0.7);
                CHECK(scores.per_topic[static_cast<std::size_t>(t)] ==
                      doctest::Approx(expected).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("sweep of a single K normalizes to exactly 1.0") {
    const auto fx = fixtures::make_lda_fixture(25, 20, 3, 15, 0.3, 0.1, 55);
    SweepConfig cfg;
    cfg.k_min = 3;
    cfg.k_max = 3;
    cfg.hyper.iterations = 40;
    cfg.hyper.burn_in = 20;
    cfg.hyper.seed = 5;
    const auto table = sweep(fx.corpus, cfg);
    REQUIRE(table.entries.size() == 1);
    CHECK(table.entries[0].coherence_norm == 1.0);
    CHECK(table.entries[0].exclusivity_norm == 1.0);
}

TEST_CASE("sweep normalized means are exactly one and order is preserved") {
    const auto fx = fixtures::make_lda_fixture(40, 30, 4, 20, 0.2, 0.05, 66);
    SweepConfig cfg;
    cfg.k_min = 2;
    cfg.k_max = 6;
    cfg.hyper.iterations = 60;
    cfg.hyper.burn_in = 30;
    cfg.hyper.seed = 6;
    const auto table = sweep(fx.corpus, cfg);
    REQUIRE(table.entries.size() == 5);

    double coh_mean = 0.0, exc_mean = 0.0;
    for (const auto& e : table.entries) {
        coh_mean += e.coherence_norm;
        exc_mean += e.exclusivity_norm;
    }
    CHECK(coh_mean / 5.0 == 1.0);
    CHECK(exc_mean / 5.0 == 1.0);

    // Orientation: a better raw metric must give a higher normalized value.
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        for (std::size_t j = 0; j < table.entries.size(); ++j) {
            if (table.entries[i].coherence_raw > table.entries[j].coherence_raw) {
                CHECK(table.entries[i].coherence_norm > table.entries[j].coherence_norm);
            }
            if (table.entries[i].exclusivity_raw > table.entries[j].exclusivity_raw) {
                CHECK(table.entries[i].exclusivity_norm > table.entries[j].exclusivity_norm);
            }
        }
    }
    // K values strictly increasing.
    for (std::size_t i = 1; i < table.entries.size(); ++i) {
        CHECK(table.entries[i].k > table.entries[i - 1].k);
    }
}

TEST_CASE("select_k rules") {
    SweepTable table;
    SUBCASE("single entry wins") {
        ModelScore only;
        only.k = 7;
        only.coherence_norm = 1.0;
        only.exclusivity_norm = 1.0;
        table.entries = {only};
        CHECK(select_k(table).chosen_k == 7);
    }
    SUBCASE("tie on the sum goes to the smaller K") {
        ModelScore a, b;
        a.k = 5;
        a.coherence_norm = 1.2;
        a.exclusivity_norm = 1.1;
        b.k = 7;
        b.coherence_norm = 1.1;
        b.exclusivity_norm = 1.2;
        table.entries = {a, b};
        const auto sel = select_k(table);
        CHECK(sel.chosen_k == 5);
        CHECK(sel.runner_up_k == 7);
    }
    SUBCASE("coherence peak with an exclusivity plateau picks the peak") {
        // The published sweep's shape: exclusivity flat on top, coherence
        // peaking at one K.
        const std::vector<std::pair<double, double>> shape = {
            {0.90, 1.02}, {0.95, 1.01}, {1.30, 1.00}, {0.95, 0.99}, {0.90, 0.98}};
        int k = 10;
        for (const auto& [coh, exc] : shape) {
            ModelScore s;
            s.k = k++;
            s.coherence_norm = coh;
            s.exclusivity_norm = exc;
            table.entries.push_back(s);
        }
        CHECK(select_k(table).chosen_k == 12);
    }
    SUBCASE("empty table is an error") {
        CHECK_THROWS_AS(select_k(table), std::invalid_argument);
    }
}

TEST_CASE("select_k invariant to positive rescaling of both raw metrics") {
    const auto fx = fixtures::make_lda_fixture(30, 25, 3, 15, 0.3, 0.1, 91);
    SweepConfig cfg;
    cfg.k_min = 2;
    cfg.k_max = 5;
    cfg.hyper.iterations = 40;
    cfg.hyper.burn_in = 20;
    cfg.hyper.seed = 9;
    auto table = sweep(fx.corpus, cfg);
    const int baseline = select_k(table).chosen_k;

    for (double scale : {0.25, 3.0, 117.0}) {
        std::vector<double> coh, exc;
        for (const auto& e : table.entries) {
            coh.push_back(e.coherence_raw * scale);
            exc.push_back(e.exclusivity_raw * scale);
        }
        const auto coh_n = normalize_by_mean(coh);
        const auto exc_n = normalize_by_mean(exc);
        SweepTable scaled = table;
        for (std::size_t i = 0; i < scaled.entries.size(); ++i) {
            scaled.entries[i].coherence_raw = coh[i];
            scaled.entries[i].coherence_norm = coh_n[i];
            scaled.entries[i].exclusivity_raw = exc[i];
            scaled.entries[i].exclusivity_norm = exc_n[i];
        }
        CHECK(select_k(scaled).chosen_k == baseline);
    }
}

TEST_CASE("sweep rejects bad ranges") {
    const auto fx = fixtures::make_lda_fixture(10, 10, 2, 8, 0.5, 0.2, 101);
    SweepConfig cfg;
    cfg.k_min = 1;
    cfg.k_max = 3;
    CHECK_THROWS_AS(sweep(fx.corpus, cfg), std::invalid_argument);
    cfg.k_min = 5;
    cfg.k_max = 3;
    CHECK_THROWS_AS(sweep(fx.corpus, cfg), std::invalid_argument);
}
