#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace satkit {

struct LinearFit {
    double intercept = 0.0;
    std::vector<double> coef;  // original (unstandardized) scale
    double lambda = 0.0;       // 0 for OLS
    // Standardization used internally by the lasso solver.
    std::vector<double> x_mean;
    std::vector<double> x_scale;
    std::vector<double> beta_standardized;  // lasso solution before rescaling
    double y_mean = 0.0;
    int sweeps = 0;  // coordinate-descent sweeps used (lasso only)

    double predict_row(const double* row) const;
};

// Least squares of y on [1, X] via normal equations, falling back to
// column-pivoted QR when the normal equations are not positive definite.
// X is n x p row-major. Requires n > p + 1; rank deficiency is an error
// that names the dependent columns.
LinearFit ols(const std::vector<double>& x, std::size_t n, std::size_t p,
              const std::vector<double>& y);

struct LassoOptions {
    double tol = 1e-7;          // max coefficient change per sweep
    long long max_sweeps = 100000;
    // Starting point on the standardized scale (path warm starts).
    std::vector<double> warm_start;
};

// L1-penalized least squares,
//   (1/2n) ||y - b0 - X b||^2 + lambda * ||b||_1,
// by cyclic coordinate descent with soft-threshold updates on standardized
// columns (zero-variance columns get coefficient 0). The objective is
// checked to be non-increasing every sweep; coefficients are reported on the
// original scale. Throws on non-convergence within max_sweeps.
LinearFit lasso(const std::vector<double>& x, std::size_t n, std::size_t p,
                const std::vector<double>& y, double lambda, const LassoOptions& options = {});

// Smallest lambda that drives every coefficient to zero:
//   max_j |(1/n) x_j~' y~| over standardized columns and centered response.
double lasso_lambda_max(const std::vector<double>& x, std::size_t n, std::size_t p,
                        const std::vector<double>& y);

// Lambda chosen by 5-fold cross-validation over a 50-point log grid from
// lambda_max down to lambda_max/1000 (ties go to the sparser model).
double choose_lasso_lambda(const std::vector<double>& x, std::size_t n, std::size_t p,
                           const std::vector<double>& y, std::uint64_t seed);

enum class CvEstimator { ols, lasso };

struct CvReport {
    std::vector<double> fold_rmse;
    double mean_rmse = 0.0;
    double baseline_sd = 0.0;  // sample standard deviation of y
    std::uint64_t seed = 0;
    std::vector<int> fold_assignment;        // per row
    std::vector<double> fold_lambda;         // chosen per fold (lasso only)
    std::vector<int> zero_variance_folds;    // flagged, still scored
};

// K-fold cross-validation RMSE. Rows are shuffled by seed into folds whose
// sizes differ by at most one. For the lasso the per-fold lambda is chosen
// by an inner 5-fold grid search (50 log-spaced points from lambda_max down
// to lambda_max/1000).
CvReport cv_error(const std::vector<double>& x, std::size_t n, std::size_t p,
                  const std::vector<double>& y, CvEstimator estimator, int folds = 5,
                  std::uint64_t seed = 1, unsigned threads = 0);

struct RankedPredictor {
    int feature = 0;
    double coef = 0.0;
    int rank = 0;         // 1-based among selected predictors
    bool selected = false;  // false for exactly-zero coefficients
};

// Descending |coefficient|; zero coefficients are listed last, unselected.
std::vector<RankedPredictor> rank_predictors(const LinearFit& fit);

}  // namespace satkit
