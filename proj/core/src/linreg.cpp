#include "satkit/linreg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "satkit/log.hpp"
#include "satkit/parallel.hpp"
#include "satkit/rng.hpp"

namespace satkit {

double LinearFit::predict_row(const double* row) const {
    double v = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) v += coef[j] * row[j];
    return v;
}

namespace {

Eigen::MatrixXd design_with_intercept(const std::vector<double>& x, std::size_t n, std::size_t p) {
    Eigen::MatrixXd a(n, p + 1);
    for (std::size_t i = 0; i < n; ++i) {
        a(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = x[i * p + j];
        }
    }
    return a;
}

}  // namespace

LinearFit ols(const std::vector<double>& x, std::size_t n, std::size_t p,
              const std::vector<double>& y) {
    if (x.size() != n * p || y.size() != n) throw std::invalid_argument("ols: shape mismatch");
    if (n <= p + 1) {
        throw std::invalid_argument("ols: need more rows than parameters (n > p + 1)");
    }
    const Eigen::MatrixXd a = design_with_intercept(x, n, p);
    const Eigen::Map<const Eigen::VectorXd> b(y.data(), static_cast<Eigen::Index>(n));

    Eigen::VectorXd beta;
    const Eigen::MatrixXd gram = a.transpose() * a;
    const Eigen::VectorXd rhs = a.transpose() * b;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    bool ok = llt.info() == Eigen::Success;
    if (ok) {
        beta = llt.solve(rhs);
        // Singular gram matrices can pass the factorization; verify the
        // solve before accepting it.
        ok = (gram * beta - rhs).norm() <= 1e-8 * (1.0 + rhs.norm());
    }
    if (!ok) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        if (qr.rank() < static_cast<Eigen::Index>(p + 1)) {
            std::string cols;
            const auto& perm = qr.colsPermutation().indices();
            for (Eigen::Index i = qr.rank(); i < perm.size(); ++i) {
                if (!cols.empty()) cols += ", ";
                const Eigen::Index col = perm(i);
                cols += col == 0 ? "intercept" : "x" + std::to_string(col - 1);
            }
            throw std::invalid_argument("ols: rank-deficient design, dependent columns: " + cols);
        }
        beta = qr.solve(b);
    }

    LinearFit fit;
    fit.intercept = beta(0);
    fit.coef.resize(p);
    for (std::size_t j = 0; j < p; ++j) fit.coef[j] = beta(static_cast<Eigen::Index>(j + 1));
    return fit;
}

namespace {

struct Standardized {
    std::vector<double> x;  // standardized columns, zero-variance left as 0
    std::vector<double> mean;
    std::vector<double> scale;  // population sd; 0 marks a dropped column
    std::vector<double> y;      // centered
    double y_mean = 0.0;
};

Standardized standardize(const std::vector<double>& x, std::size_t n, std::size_t p,
                         const std::vector<double>& y) {
    Standardized s;
    s.mean.assign(p, 0.0);
    s.scale.assign(p, 0.0);
    s.x.assign(n * p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x[i * p + j];
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i * p + j] - m;
            var += d * d;
        }
        var /= static_cast<double>(n);
        s.mean[j] = m;
        s.scale[j] = std::sqrt(var);
        if (s.scale[j] > 0.0) {
            for (std::size_t i = 0; i < n; ++i) s.x[i * p + j] = (x[i * p + j] - m) / s.scale[j];
        }
    }
    s.y.resize(n);
    for (double v : y) s.y_mean += v;
    s.y_mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) s.y[i] = y[i] - s.y_mean;
    return s;
}

double soft_threshold(double z, double lambda) {
    if (z > lambda) return z - lambda;
    if (z < -lambda) return z + lambda;
    return 0.0;
}

}  // namespace

double lasso_lambda_max(const std::vector<double>& x, std::size_t n, std::size_t p,
                        const std::vector<double>& y) {
    const Standardized s = standardize(x, n, p, y);
    double best = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += s.x[i * p + j] * s.y[i];
        best = std::max(best, std::abs(dot) / static_cast<double>(n));
    }
    return best;
}

LinearFit lasso(const std::vector<double>& x, std::size_t n, std::size_t p,
                const std::vector<double>& y, double lambda, const LassoOptions& options) {
    if (x.size() != n * p || y.size() != n) throw std::invalid_argument("lasso: shape mismatch");
    if (lambda < 0.0) throw std::invalid_argument("lasso: lambda must be >= 0");

    const Standardized s = standardize(x, n, p, y);
    const double dn = static_cast<double>(n);

    std::vector<double> beta(p, 0.0);
    if (!options.warm_start.empty()) {
        if (options.warm_start.size() != p) {
            throw std::invalid_argument("lasso: warm start size mismatch");
        }
        beta = options.warm_start;
    }
    std::vector<double> residual = s.y;  // y - X beta, on standardized scale
    for (std::size_t j = 0; j < p; ++j) {
        if (beta[j] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) residual[i] -= beta[j] * s.x[i * p + j];
    }

    auto objective = [&] {
        double rss = 0.0;
        for (double r : residual) rss += r * r;
        double l1 = 0.0;
        for (double b : beta) l1 += std::abs(b);
        return rss / (2.0 * dn) + lambda * l1;
    };

    double prev_obj = objective();
    long long sweeps = 0;
    bool converged = false;
    for (; sweeps < options.max_sweeps && !converged; ++sweeps) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (s.scale[j] == 0.0) continue;  // constant column, stays 0
            const double old = beta[j];
            // rho = (1/n) x_j' (residual + x_j * old); x_j'x_j/n == 1.
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += s.x[i * p + j] * residual[i];
            rho = rho / dn + old;
            const double next = soft_threshold(rho, lambda);
            if (next != old) {
                const double delta = next - old;
                for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * s.x[i * p + j];
                beta[j] = next;
            }
            max_change = std::max(max_change, std::abs(next - old));
        }
        const double obj = objective();
        if (obj > prev_obj + 1e-10 * (1.0 + std::abs(prev_obj))) {
            throw std::logic_error("lasso: objective increased across a sweep");
        }
        prev_obj = obj;
        if (max_change < options.tol) converged = true;
    }
    if (!converged) {
        double rss = 0.0;
        for (double r : residual) rss += r * r;
        throw std::runtime_error("lasso: no convergence after " + std::to_string(options.max_sweeps) +
                                 " sweeps (objective " + std::to_string(prev_obj) + ", rss " +
                                 std::to_string(rss) + ")");
    }

    LinearFit fit;
    fit.lambda = lambda;
    fit.x_mean = s.mean;
    fit.x_scale = s.scale;
    fit.beta_standardized = beta;
    fit.y_mean = s.y_mean;
    fit.sweeps = static_cast<int>(sweeps);
    fit.coef.resize(p);
    fit.intercept = s.y_mean;
    for (std::size_t j = 0; j < p; ++j) {
        fit.coef[j] = s.scale[j] > 0.0 ? beta[j] / s.scale[j] : 0.0;
        fit.intercept -= fit.coef[j] * s.mean[j];
    }
    return fit;
}

namespace {

double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

struct Subset {
    std::vector<double> x;
    std::vector<double> y;
    std::size_t n = 0;
};

Subset take_rows(const std::vector<double>& x, std::size_t p, const std::vector<double>& y,
                 const std::vector<int>& fold, int exclude, bool keep_excluded) {
    Subset s;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const bool in_fold = fold[i] == exclude;
        if (in_fold != keep_excluded) continue;
        for (std::size_t j = 0; j < p; ++j) s.x.push_back(x[i * p + j]);
        s.y.push_back(y[i]);
        ++s.n;
    }
    return s;
}

constexpr int kLambdaGridSize = 50;
constexpr double kLambdaMinRatio = 1e-3;

std::vector<double> lambda_grid(double lambda_max) {
    std::vector<double> grid(kLambdaGridSize);
    const double lo = std::log(lambda_max * kLambdaMinRatio);
    const double hi = std::log(lambda_max);
    for (int i = 0; i < kLambdaGridSize; ++i) {
        grid[static_cast<std::size_t>(i)] =
            std::exp(hi + (lo - hi) * static_cast<double>(i) / (kLambdaGridSize - 1));
    }
    return grid;
}

// Inner 5-fold CV over the lambda grid; smallest mean RMSE wins, ties to the
// larger lambda (sparser model). Fits walk the grid from lambda_max down
// with warm starts.
double choose_lambda(const Subset& train, std::size_t p, std::uint64_t seed) {
    const double lmax = lasso_lambda_max(train.x, train.n, p, train.y);
    if (lmax <= 0.0) return 0.0;
    const auto grid = lambda_grid(lmax);

    const int inner_folds = 5;
    std::vector<int> fold(train.n);
    for (std::size_t i = 0; i < train.n; ++i) fold[i] = static_cast<int>(i % inner_folds);
    Rng rng(seed);
    rng.shuffle(fold);

    std::vector<double> score(grid.size(), 0.0);
    for (int f = 0; f < inner_folds; ++f) {
        const Subset tr = take_rows(train.x, p, train.y, fold, f, false);
        const Subset te = take_rows(train.x, p, train.y, fold, f, true);
        if (tr.n == 0 || te.n == 0) continue;
        LassoOptions opts;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const LinearFit fit = lasso(tr.x, tr.n, p, tr.y, grid[g], opts);
            opts.warm_start = fit.beta_standardized;
            std::vector<double> pred(te.n);
            for (std::size_t i = 0; i < te.n; ++i) pred[i] = fit.predict_row(&te.x[i * p]);
            score[g] += rmse(pred, te.y);
        }
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (score[g] < score[best]) best = g;
    }
    return grid[best];
}

}  // namespace

double choose_lasso_lambda(const std::vector<double>& x, std::size_t n, std::size_t p,
                           const std::vector<double>& y, std::uint64_t seed) {
    Subset all;
    all.x = x;
    all.y = y;
    all.n = n;
    return choose_lambda(all, p, seed);
}

CvReport cv_error(const std::vector<double>& x, std::size_t n, std::size_t p,
                  const std::vector<double>& y, CvEstimator estimator, int folds,
                  std::uint64_t seed, unsigned threads) {
    if (n < static_cast<std::size_t>(folds)) throw std::invalid_argument("cv_error: need n >= folds");

    CvReport report;
    report.seed = seed;
    report.fold_assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        report.fold_assignment[i] = static_cast<int>(i % static_cast<std::size_t>(folds));
    }
    Rng rng(seed);
    rng.shuffle(report.fold_assignment);

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double ssq = 0.0;
    for (double v : y) ssq += (v - mean) * (v - mean);
    report.baseline_sd = n > 1 ? std::sqrt(ssq / static_cast<double>(n - 1)) : 0.0;

    report.fold_rmse.assign(static_cast<std::size_t>(folds), 0.0);
    report.fold_lambda.assign(static_cast<std::size_t>(folds), 0.0);
    std::vector<int> zero_var(static_cast<std::size_t>(folds), 0);

    parallel_for(static_cast<std::size_t>(folds), threads, [&](std::size_t f) {
        const Subset train = take_rows(x, p, y, report.fold_assignment, static_cast<int>(f), false);
        const Subset test = take_rows(x, p, y, report.fold_assignment, static_cast<int>(f), true);

        double y0 = train.y.empty() ? 0.0 : train.y.front();
        bool constant = true;
        for (double v : train.y) {
            if (v != y0) {
                constant = false;
                break;
            }
        }
        if (constant) zero_var[f] = 1;

        LinearFit fit;
        if (estimator == CvEstimator::ols) {
            fit = ols(train.x, train.n, p, train.y);
        } else {
            const double lambda = choose_lambda(train, p, derive_seed(seed, f));
            report.fold_lambda[f] = lambda;
            fit = lasso(train.x, train.n, p, train.y, lambda);
        }
        std::vector<double> pred(test.n);
        for (std::size_t i = 0; i < test.n; ++i) pred[i] = fit.predict_row(&test.x[i * p]);
        report.fold_rmse[f] = rmse(pred, test.y);
    });

    for (int f = 0; f < folds; ++f) {
        if (zero_var[static_cast<std::size_t>(f)]) report.zero_variance_folds.push_back(f);
        report.mean_rmse += report.fold_rmse[static_cast<std::size_t>(f)];
    }
    if (!report.zero_variance_folds.empty()) {
        warn("cv_error: " + std::to_string(report.zero_variance_folds.size()) +
             " fold(s) trained on zero-variance response");
    }
    report.mean_rmse /= static_cast<double>(folds);
    return report;
}

std::vector<RankedPredictor> rank_predictors(const LinearFit& fit) {
    std::vector<RankedPredictor> out(fit.coef.size());
    for (std::size_t j = 0; j < fit.coef.size(); ++j) {
        out[j].feature = static_cast<int>(j);
        out[j].coef = fit.coef[j];
        out[j].selected = fit.coef[j] != 0.0;
    }
    std::stable_sort(out.begin(), out.end(), [](const RankedPredictor& a, const RankedPredictor& b) {
        if (a.selected != b.selected) return a.selected;
        return std::abs(a.coef) > std::abs(b.coef);
    });
    int rank = 0;
    for (auto& r : out) {
        r.rank = r.selected ? ++rank : 0;
    }
    return out;
}

}  // namespace satkit
