#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "satkit/corpus.hpp"
#include "satkit/lda.hpp"
#include "satkit/polarity.hpp"

namespace satkit {

struct PanelCell {
    std::string ccg_id;
    std::string month;  // YYYY-MM
    std::array<std::optional<double>, kNumRatings> mean_ratings;
    double mean_positive = 0.0;  // mean per-review topic mass by polarity
    double mean_negative = 0.0;
    double mean_neutral = 0.0;
    double mean_imd = 0.0;
    double mean_patients = 0.0;
    int n_reviews = 0;
};

struct PanelTable {
    std::vector<PanelCell> cells;  // sorted by (ccg_id, month)
};

// One cell per (CCG, month): unweighted means of ratings, polarity-cluster
// topic masses, deprivation, and register size over the cell's reviews.
// doc_index maps each review to its document row in the model (reviews
// dropped upstream simply do not appear here).
PanelTable aggregate_panel(const std::vector<EnrichedReview>& reviews, const LdaModel& model,
                           const std::vector<int>& doc_index,
                           const std::vector<Polarity>& topic_polarity);

enum class RobustSe { hc1, cluster_ccg };

struct FeOptions {
    RobustSe robust = RobustSe::hc1;
    double demean_tol = 1e-10;
    int max_demean_iters = 10000;
};

struct FeTerm {
    std::string name;
    double coef = 0.0;
    double se = 0.0;
    double t_stat = 0.0;
    double p_value = 1.0;
    std::string stars;  // "***" p<0.001, "**" p<0.01, "*" p<0.05
};

struct FeResult {
    int depvar = 0;  // rating dimension index
    std::vector<FeTerm> terms;  // positive, negative, imd, patients
    double r2_overall = 0.0;    // of the equivalent full-dummy model
    double r2_within = 0.0;
    double adj_r2 = 0.0;
    int n_obs = 0;
    int n_ccg = 0;
    int n_month = 0;
    int singletons_dropped = 0;
};

// Two-way fixed effects of a rating dimension on the positive and negative
// cluster proportions plus controls (deprivation, register size). CCG and
// month intercepts are absorbed by alternating within-demeaning; the slope
// estimates equal explicit dummy-variable OLS. Standard errors are
// heteroskedasticity-robust (HC1 with absorbed-effect degrees of freedom),
// optionally clustered by CCG. Cells lacking the dependent rating are
// skipped; singleton CCGs/months are dropped iteratively and counted.
FeResult fit_two_way_fe(const PanelTable& panel, int depvar, const FeOptions& options = {});

// Demeans each column of a row-major n x p matrix by every factor in turn
// (alternating projections) until all factor-level means are below tol.
// Exposed so the absorption step can be tested against explicit dummy OLS.
std::vector<double> within_residualize(std::vector<double> matrix, std::size_t n, std::size_t p,
                                       const std::vector<std::vector<int>>& factors,
                                       double tol = 1e-10, int max_iters = 10000);

// Formats results as an aligned text table (coefficients with SEs in
// brackets and significance stars), one column per fitted dimension.
std::string format_fe_table(const std::vector<FeResult>& results);

}  // namespace satkit
