#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "satkit/panel.hpp"
#include "satkit/rng.hpp"

using namespace satkit;

namespace {

EnrichedReview make_enriched(const std::string& id, const std::string& ccg,
                             const std::string& month, double imd, long long patients) {
    EnrichedReview r;
    r.review_id = id;
    r.practice_id = "p";
    r.posted_month = month;
    r.ccg_id = ccg;
    r.imd_weighted = imd;
    r.patients_registered = patients;
    return r;
}

LdaModel theta_model(const std::vector<std::vector<double>>& rows) {
    LdaModel m;
    m.num_docs = static_cast<int>(rows.size());
    m.num_topics = static_cast<int>(rows[0].size());
    m.vocab_size = 1;
    for (const auto& r : rows) m.doc_topic.insert(m.doc_topic.end(), r.begin(), r.end());
    return m;
}

// Random panel generator with known slope structure. Every CCG and month
// gets at least two cells so no singletons are dropped.
struct RandomPanel {
    PanelTable table;
    std::vector<double> x;  // n x 4
    std::vector<double> y;
    std::vector<int> ccg;
    std::vector<int> month;
    std::size_t n = 0;
};

RandomPanel make_random_panel(Rng& rng, int n_ccg, int n_month, const double beta[4],
                              double noise, int depvar = 0) {
    RandomPanel p;
    std::vector<double> ccg_fx(static_cast<std::size_t>(n_ccg));
    std::vector<double> month_fx(static_cast<std::size_t>(n_month));
    for (auto& v : ccg_fx) v = 2.0 * rng.normal();
    for (auto& v : month_fx) v = rng.normal();
    for (int c = 0; c < n_ccg; ++c) {
        for (int m = 0; m < n_month; ++m) {
            if (rng.uniform() < 0.2 && static_cast<int>(p.n) > 2) continue;  // unbalanced
            PanelCell cell;
            cell.ccg_id = "ccg" + std::to_string(c);
            cell.month = "2015-" + std::string(m + 1 < 10 ? "0" : "") + std::to_string(m + 1);
            const double pos = 0.2 + 0.3 * rng.uniform();
            const double neg = 0.2 + 0.3 * rng.uniform();
            cell.mean_positive = pos;
            cell.mean_negative = neg;
            cell.mean_neutral = 1.0 - pos - neg;
            cell.mean_imd = 1.0 + 9.0 * rng.uniform();
            cell.mean_patients = 1000.0 + 9000.0 * rng.uniform();
            const double value = beta[0] * pos + beta[1] * neg + beta[2] * cell.mean_imd +
                                 beta[3] * cell.mean_patients + ccg_fx[static_cast<std::size_t>(c)] +
                                 month_fx[static_cast<std::size_t>(m)] + noise * rng.normal();
            cell.mean_ratings[static_cast<std::size_t>(depvar)] = value;
            cell.n_reviews = 1;
            p.table.cells.push_back(cell);
            p.x.insert(p.x.end(), {pos, neg, cell.mean_imd, cell.mean_patients});
            p.y.push_back(value);
            p.ccg.push_back(c);
            p.month.push_back(m);
            ++p.n;
        }
    }
    return p;
}

}  // namespace

TEST_CASE("aggregate_panel forms one cell per (ccg, month) with unweighted means") {
    std::vector<EnrichedReview> reviews = {
        make_enriched("r1", "c1", "2015-01", 4.0, 2000),
        make_enriched("r2", "c1", "2015-01", 6.0, 4000),
        make_enriched("r3", "c1", "2015-02", 5.0, 3000),
    };
    reviews[0].ratings[0] = 5;
    reviews[1].ratings[0] = 2;
    reviews[1].ratings[1] = 1;
    // theta rows: positive = topic 0, negative = topic 1, neutral = topic 2
    const auto model = theta_model({{0.2, 0.5, 0.3}, {0.4, 0.1, 0.5}, {0.9, 0.05, 0.05}});
    const std::vector<Polarity> polarity = {Polarity::positive, Polarity::negative,
                                            Polarity::neutral};
    const auto table = aggregate_panel(reviews, model, {0, 1, 2}, polarity);
    REQUIRE(table.cells.size() == 2);
    const auto& cell = table.cells[0];
    CHECK(cell.ccg_id == "c1");
    CHECK(cell.month == "2015-01");
    CHECK(cell.n_reviews == 2);
    CHECK(*cell.mean_ratings[0] == doctest::Approx(3.5));
    CHECK(*cell.mean_ratings[1] == doctest::Approx(1.0));
    CHECK_FALSE(cell.mean_ratings[2].has_value());
    CHECK(cell.mean_positive == doctest::Approx(0.3));   // (0.2 + 0.4) / 2
    CHECK(cell.mean_negative == doctest::Approx(0.3));   // (0.5 + 0.1) / 2
    CHECK(cell.mean_neutral == doctest::Approx(0.4));    // (0.3 + 0.5) / 2
    CHECK(cell.mean_positive + cell.mean_negative + cell.mean_neutral ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cell.mean_imd == doctest::Approx(5.0));
    CHECK(cell.mean_patients == doctest::Approx(3000.0));

    SUBCASE("single review cell carries its own values") {
        const auto& single = table.cells[1];
        CHECK(single.n_reviews == 1);
        CHECK(single.mean_positive == doctest::Approx(0.9));
        CHECK(single.mean_imd == doctest::Approx(5.0));
    }
}

TEST_CASE("aggregate_panel validates its inputs") {
    std::vector<EnrichedReview> reviews = {make_enriched("r1", "", "2015-01", 1.0, 10)};
    const auto model = theta_model({{1.0}});
    CHECK_THROWS_AS(aggregate_panel(reviews, model, {0}, {Polarity::neutral}),
                    std::invalid_argument);
    std::vector<EnrichedReview> ok = {make_enriched("r1", "c", "2015-01", 1.0, 10)};
    CHECK_THROWS_AS(aggregate_panel(ok, model, {0, 1}, {Polarity::neutral}),
                    std::invalid_argument);
    CHECK_THROWS_AS(aggregate_panel(ok, model, {5}, {Polarity::neutral}), std::out_of_range);
}

TEST_CASE("within_residualize grand-mean centers under a single factor level") {
    std::vector<double> m = {1.0, 2.0, 3.0, 4.0};
    const auto out = within_residualize(m, 4, 1, {{0, 0, 0, 0}});
    CHECK(out[0] == doctest::Approx(-1.5));
    CHECK(out[1] == doctest::Approx(-0.5));
    CHECK(out[2] == doctest::Approx(0.5));
    CHECK(out[3] == doctest::Approx(1.5));
}

TEST_CASE("within_residualize reproduces balanced 2x2 double demeaning") {
    // Rows: (a,0), (a,1), (b,0), (b,1); values v_ij.
    // Double demeaning of a balanced 2x2 leaves v_ij - row_i - col_j + grand.
    const std::vector<double> v = {3.0, 5.0, 4.0, 10.0};
    const std::vector<int> fa = {0, 0, 1, 1};
    const std::vector<int> fb = {0, 1, 0, 1};
    const auto out = within_residualize(v, 4, 1, {fa, fb});
    const double grand = (3 + 5 + 4 + 10) / 4.0;
    const double row0 = 4.0, row1 = 7.0, col0 = 3.5, col1 = 7.5;
    const double expected[4] = {3 - row0 - col0 + grand, 5 - row0 - col1 + grand,
                                4 - row1 - col0 + grand, 10 - row1 - col1 + grand};
    for (int i = 0; i < 4; ++i) {
        CHECK(out[static_cast<std::size_t>(i)] == doctest::Approx(expected[i]).epsilon(1e-10));
    }
}

TEST_CASE("within_residualize leaves residuals orthogonal to every factor dummy") {
    Rng rng(15);
    const std::size_t n = 60;
    std::vector<double> m(n);
    std::vector<int> fa(n), fb(n);
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = rng.normal() * 3.0;
        fa[i] = static_cast<int>(rng.uniform_index(5));
        fb[i] = static_cast<int>(rng.uniform_index(7));
    }
    const auto out = within_residualize(m, n, 1, {fa, fb});
    for (int level = 0; level < 5; ++level) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += fa[i] == level ? out[i] : 0.0;
        CHECK(std::abs(dot) < 1e-8);
    }
    for (int level = 0; level < 7; ++level) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += fb[i] == level ? out[i] : 0.0;
        CHECK(std::abs(dot) < 1e-8);
    }
}

TEST_CASE("noise-free panel recovers the planted slope") {
    Rng rng(16);
    const double beta[4] = {3.0, -1.0, 0.05, 0.0001};
    const auto panel = make_random_panel(rng, 8, 10, beta, 0.0);
    const auto result = fit_two_way_fe(panel.table, 0);
    CHECK(result.terms[0].coef == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(result.terms[1].coef == doctest::Approx(-1.0).epsilon(1e-8));
    CHECK(result.terms[2].coef == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(result.r2_overall == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("constant dependent variable zeroes the fit") {
    Rng rng(17);
    const double beta[4] = {0.0, 0.0, 0.0, 0.0};
    auto panel = make_random_panel(rng, 5, 6, beta, 0.0);
    for (auto& cell : panel.table.cells) cell.mean_ratings[0] = 4.0;
    const auto result = fit_two_way_fe(panel.table, 0);
    for (const auto& t : result.terms) CHECK(std::abs(t.coef) < 1e-10);
    CHECK(result.r2_overall == doctest::Approx(0.0));
}

TEST_CASE("absorbed estimates equal explicit dummy OLS on 100 random panels") {
    Rng rng(18);
    for (int trial = 0; trial < 100; ++trial) {
        const double beta[4] = {2.0 * rng.normal(), 2.0 * rng.normal(), 0.1 * rng.normal(),
                                0.001 * rng.normal()};
        const int n_ccg = 3 + static_cast<int>(rng.uniform_index(18));   // up to 20
        const int n_month = 3 + static_cast<int>(rng.uniform_index(10));  // up to 12
        const auto panel = make_random_panel(rng, n_ccg, n_month, beta, 0.5);
        FeResult result;
        try {
            result = fit_two_way_fe(panel.table, 0);
        } catch (const std::invalid_argument&) {
            continue;  // a degenerate draw (too few levels after drops)
        }
        REQUIRE(result.singletons_dropped == 0);
        const auto reference =
            oracle::dummy_fe_slopes(panel.x, panel.n, 4, panel.y, panel.ccg, panel.month);
        for (int j = 0; j < 4; ++j) {
            CHECK(result.terms[static_cast<std::size_t>(j)].coef ==
                  doctest::Approx(reference[static_cast<std::size_t>(j)]).epsilon(1e-8));
        }
    }
}

TEST_CASE("coefficients are invariant to CCG-constant and month-constant shifts") {
    Rng rng(19);
    const double beta[4] = {1.5, -2.0, 0.02, 0.0};
    const auto panel = make_random_panel(rng, 6, 8, beta, 0.3);
    const auto base = fit_two_way_fe(panel.table, 0);

    PanelTable shifted = panel.table;
    for (auto& cell : shifted.cells) {
        const double ccg_shift = 10.0 * static_cast<double>(cell.ccg_id.back() - '0');
        const double month_shift = cell.month == "2015-01" ? -4.0 : 1.5;
        cell.mean_ratings[0] = *cell.mean_ratings[0] + ccg_shift + month_shift;
    }
    const auto moved = fit_two_way_fe(shifted, 0);
    for (int j = 0; j < 4; ++j) {
        CHECK(moved.terms[static_cast<std::size_t>(j)].coef ==
              doctest::Approx(base.terms[static_cast<std::size_t>(j)].coef).epsilon(1e-8));
    }
}

TEST_CASE("singleton CCGs and months are dropped and counted") {
    Rng rng(20);
    const double beta[4] = {1.0, -1.0, 0.0, 0.0};
    auto panel = make_random_panel(rng, 5, 6, beta, 0.2);
    // Add one cell with a CCG that appears nowhere else.
    PanelCell lonely = panel.table.cells[0];
    lonely.ccg_id = "ccg_lonely";
    lonely.month = panel.table.cells[1].month;
    panel.table.cells.push_back(lonely);
    const auto result = fit_two_way_fe(panel.table, 0);
    CHECK(result.singletons_dropped >= 1);
    CHECK(result.n_obs == static_cast<int>(panel.n));
}

TEST_CASE("robust standard errors are positive and clustered option runs") {
    Rng rng(21);
    const double beta[4] = {2.0, -1.0, 0.05, 0.0};
    const auto panel = make_random_panel(rng, 10, 8, beta, 0.5);
    const auto hc1 = fit_two_way_fe(panel.table, 0);
    for (const auto& t : hc1.terms) CHECK(t.se > 0.0);
    FeOptions opt;
    opt.robust = RobustSe::cluster_ccg;
    const auto clustered = fit_two_way_fe(panel.table, 0, opt);
    for (int j = 0; j < 4; ++j) {
        CHECK(clustered.terms[static_cast<std::size_t>(j)].coef ==
              doctest::Approx(hc1.terms[static_cast<std::size_t>(j)].coef).epsilon(1e-10));
        CHECK(clustered.terms[static_cast<std::size_t>(j)].se > 0.0);
    }
    // Strong planted effects should be flagged significant under either.
    CHECK(hc1.terms[0].stars == "***");
}

TEST_CASE("fe table formatting carries stars and bracketed errors") {
    Rng rng(22);
    const double beta[4] = {2.0, -1.5, 0.0, 0.0};
    const auto panel = make_random_panel(rng, 8, 8, beta, 0.2);
    const auto result = fit_two_way_fe(panel.table, 0);
    const auto text = format_fe_table({result});
    CHECK(text.find("positive_topics") != std::string::npos);
    CHECK(text.find("(") != std::string::npos);
    CHECK(text.find("CCG FE") != std::string::npos);
    CHECK(text.find("Num. Obs.") != std::string::npos);
}

TEST_CASE("two-way FE needs two levels of both factors") {
    Rng rng(23);
    const double beta[4] = {1.0, 1.0, 0.0, 0.0};
    auto panel = make_random_panel(rng, 4, 5, beta, 0.1);
    for (auto& cell : panel.table.cells) cell.ccg_id = "only";
    CHECK_THROWS_AS(fit_two_way_fe(panel.table, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit_two_way_fe(panel.table, 9), std::invalid_argument);
}
