#include "satkit/panel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "satkit/log.hpp"

namespace satkit {

PanelTable aggregate_panel(const std::vector<EnrichedReview>& reviews, const LdaModel& model,
                           const std::vector<int>& doc_index,
                           const std::vector<Polarity>& topic_polarity) {
    if (reviews.size() != doc_index.size()) {
        throw std::invalid_argument("aggregate_panel: doc_index must cover reviews");
    }
    if (static_cast<int>(topic_polarity.size()) != model.num_topics) {
        throw std::invalid_argument("aggregate_panel: polarity map must cover all topics");
    }

    struct Acc {
        std::array<double, kNumRatings> rating_sum{};
        std::array<int, kNumRatings> rating_n{};
        double pos = 0.0, neg = 0.0, neu = 0.0;
        double imd = 0.0, patients = 0.0;
        int n = 0;
    };
    std::map<std::pair<std::string, std::string>, Acc> cells;

    for (std::size_t i = 0; i < reviews.size(); ++i) {
        const auto& r = reviews[i];
        if (r.ccg_id.empty() || r.posted_month.empty()) {
            throw std::invalid_argument("aggregate_panel: review without ccg or month");
        }
        const int d = doc_index[i];
        if (d < 0 || d >= model.num_docs) {
            throw std::out_of_range("aggregate_panel: doc_index out of range");
        }
        auto& acc = cells[{r.ccg_id, r.posted_month}];
        for (std::size_t q = 0; q < kNumRatings; ++q) {
            if (r.ratings[q]) {
                acc.rating_sum[q] += *r.ratings[q];
                ++acc.rating_n[q];
            }
        }
        for (int k = 0; k < model.num_topics; ++k) {
            const double mass = model.doc_topic_at(d, k);
            switch (topic_polarity[static_cast<std::size_t>(k)]) {
                case Polarity::positive: acc.pos += mass; break;
                case Polarity::negative: acc.neg += mass; break;
                case Polarity::neutral: acc.neu += mass; break;
            }
        }
        acc.imd += r.imd_weighted;
        acc.patients += static_cast<double>(r.patients_registered);
        ++acc.n;
    }

    PanelTable table;
    table.cells.reserve(cells.size());
    for (const auto& [key, acc] : cells) {
        PanelCell cell;
        cell.ccg_id = key.first;
        cell.month = key.second;
        cell.n_reviews = acc.n;
        for (std::size_t q = 0; q < kNumRatings; ++q) {
            if (acc.rating_n[q] > 0) cell.mean_ratings[q] = acc.rating_sum[q] / acc.rating_n[q];
        }
        cell.mean_positive = acc.pos / acc.n;
        cell.mean_negative = acc.neg / acc.n;
        cell.mean_neutral = acc.neu / acc.n;
        cell.mean_imd = acc.imd / acc.n;
        cell.mean_patients = acc.patients / acc.n;
        table.cells.push_back(std::move(cell));
    }
    return table;
}

std::vector<double> within_residualize(std::vector<double> matrix, std::size_t n, std::size_t p,
                                       const std::vector<std::vector<int>>& factors,
                                       double tol, int max_iters) {
    if (matrix.size() != n * p) throw std::invalid_argument("within_residualize: bad shape");
    for (const auto& f : factors) {
        if (f.size() != n) throw std::invalid_argument("within_residualize: factor length mismatch");
    }
    std::vector<std::size_t> levels(factors.size());
    for (std::size_t g = 0; g < factors.size(); ++g) {
        int max_level = -1;
        for (int v : factors[g]) max_level = std::max(max_level, v);
        levels[g] = static_cast<std::size_t>(max_level + 1);
    }

    for (int iter = 0; iter < max_iters; ++iter) {
        double worst = 0.0;
        for (std::size_t g = 0; g < factors.size(); ++g) {
            std::vector<double> sum(levels[g] * p, 0.0);
            std::vector<int> count(levels[g], 0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t l = static_cast<std::size_t>(factors[g][i]);
                ++count[l];
                for (std::size_t j = 0; j < p; ++j) sum[l * p + j] += matrix[i * p + j];
            }
            for (std::size_t l = 0; l < levels[g]; ++l) {
                for (std::size_t j = 0; j < p; ++j) {
                    if (count[l] > 0) {
                        const double mean = sum[l * p + j] / count[l];
                        sum[l * p + j] = mean;
                        worst = std::max(worst, std::abs(mean));
                    }
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t l = static_cast<std::size_t>(factors[g][i]);
                for (std::size_t j = 0; j < p; ++j) matrix[i * p + j] -= sum[l * p + j];
            }
        }
        if (worst < tol) return matrix;
    }
    throw std::runtime_error("within_residualize: demeaning did not converge");
}

namespace {

std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

}  // namespace

FeResult fit_two_way_fe(const PanelTable& panel, int depvar, const FeOptions& options) {
    if (depvar < 0 || depvar >= static_cast<int>(kNumRatings)) {
        throw std::invalid_argument("fit_two_way_fe: bad rating dimension");
    }

    std::vector<const PanelCell*> rows;
    for (const auto& cell : panel.cells) {
        if (cell.mean_ratings[static_cast<std::size_t>(depvar)]) rows.push_back(&cell);
    }
    if (2 * rows.size() < panel.cells.size()) {
        warn("fit_two_way_fe: dependent rating missing in more than half of the panel cells");
    }

    // Iteratively drop rows whose CCG or month appears only once; such
    // observations are absorbed exactly by their own effect and carry no
    // information about the slopes.
    int dropped = 0;
    for (bool changed = true; changed;) {
        changed = false;
        std::map<std::string, int> ccg_n, month_n;
        for (const auto* c : rows) {
            ++ccg_n[c->ccg_id];
            ++month_n[c->month];
        }
        std::vector<const PanelCell*> keep;
        keep.reserve(rows.size());
        for (const auto* c : rows) {
            if (ccg_n[c->ccg_id] <= 1 || month_n[c->month] <= 1) {
                ++dropped;
                changed = true;
            } else {
                keep.push_back(c);
            }
        }
        rows.swap(keep);
    }

    std::map<std::string, int> ccg_id, month_id;
    for (const auto* c : rows) {
        ccg_id.emplace(c->ccg_id, static_cast<int>(ccg_id.size()));
        month_id.emplace(c->month, static_cast<int>(month_id.size()));
    }
    const std::size_t n = rows.size();
    const int n_ccg = static_cast<int>(ccg_id.size());
    const int n_month = static_cast<int>(month_id.size());
    if (n_ccg < 2 || n_month < 2) {
        throw std::invalid_argument("fit_two_way_fe: need at least two CCGs and two months");
    }

    constexpr std::size_t kP = 4;  // positive, negative, imd, patients
    const char* names[kP] = {"positive_topics", "negative_topics", "avg_imd", "n_patients"};

    // Stack [y X] and demean everything at once.
    std::vector<double> data(n * (kP + 1));
    std::vector<int> f_ccg(n), f_month(n);
    std::vector<double> y_raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto* c = rows[i];
        y_raw[i] = *c->mean_ratings[static_cast<std::size_t>(depvar)];
        data[i * (kP + 1) + 0] = y_raw[i];
        data[i * (kP + 1) + 1] = c->mean_positive;
        data[i * (kP + 1) + 2] = c->mean_negative;
        data[i * (kP + 1) + 3] = c->mean_imd;
        data[i * (kP + 1) + 4] = c->mean_patients;
        f_ccg[i] = ccg_id[c->ccg_id];
        f_month[i] = month_id[c->month];
    }
    const auto demeaned = within_residualize(std::move(data), n, kP + 1, {f_ccg, f_month},
                                             options.demean_tol, options.max_demean_iters);

    Eigen::MatrixXd x(n, kP);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y(static_cast<Eigen::Index>(i)) = demeaned[i * (kP + 1)];
        for (std::size_t j = 0; j < kP; ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = demeaned[i * (kP + 1) + 1 + j];
        }
    }

    const Eigen::MatrixXd xtx = x.transpose() * x;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (!lu.isInvertible()) {
        throw std::invalid_argument("fit_two_way_fe: collinear regressors after absorption");
    }
    const Eigen::MatrixXd xtx_inv = lu.inverse();
    const Eigen::VectorXd beta = xtx_inv * (x.transpose() * y);
    const Eigen::VectorXd resid = y - x * beta;

    // Degrees of freedom of the equivalent dummy model:
    // intercept + (n_ccg - 1) + (n_month - 1) + slopes.
    const int params = static_cast<int>(kP) + n_ccg + n_month - 1;
    const int dof = static_cast<int>(n) - params;
    if (dof <= 0) throw std::invalid_argument("fit_two_way_fe: not enough observations");

    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(kP, kP);
    double correction = 1.0;
    if (options.robust == RobustSe::hc1) {
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd xi = x.row(static_cast<Eigen::Index>(i)).transpose();
            const double e = resid(static_cast<Eigen::Index>(i));
            meat += e * e * xi * xi.transpose();
        }
        correction = static_cast<double>(n) / static_cast<double>(dof);
    } else {
        std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(n_ccg),
                                          Eigen::VectorXd::Zero(kP));
        for (std::size_t i = 0; i < n; ++i) {
            sums[static_cast<std::size_t>(f_ccg[i])] +=
                resid(static_cast<Eigen::Index>(i)) * x.row(static_cast<Eigen::Index>(i)).transpose();
        }
        for (const auto& s : sums) meat += s * s.transpose();
        correction = (static_cast<double>(n_ccg) / (n_ccg - 1.0)) *
                     ((static_cast<double>(n) - 1.0) / static_cast<double>(dof));
    }
    const Eigen::MatrixXd cov = correction * xtx_inv * meat * xtx_inv;

    const boost::math::students_t t_dist(static_cast<double>(dof));

    FeResult result;
    result.depvar = depvar;
    result.n_obs = static_cast<int>(n);
    result.n_ccg = n_ccg;
    result.n_month = n_month;
    result.singletons_dropped = dropped;
    for (std::size_t j = 0; j < kP; ++j) {
        FeTerm term;
        term.name = names[j];
        term.coef = beta(static_cast<Eigen::Index>(j));
        term.se = std::sqrt(cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
        term.t_stat = term.se > 0.0 ? term.coef / term.se : 0.0;
        term.p_value = term.se > 0.0
                           ? 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::abs(term.t_stat)))
                           : 1.0;
        term.stars = significance_stars(term.p_value);
        result.terms.push_back(std::move(term));
    }

    double y_mean = 0.0;
    for (double v : y_raw) y_mean += v;
    y_mean /= static_cast<double>(n);
    double sst = 0.0;
    for (double v : y_raw) sst += (v - y_mean) * (v - y_mean);
    double sst_within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sst_within += y(static_cast<Eigen::Index>(i)) * y(static_cast<Eigen::Index>(i));
    }
    const double ssr = resid.squaredNorm();
    result.r2_overall = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
    result.r2_within = sst_within > 0.0 ? 1.0 - ssr / sst_within : 0.0;
    result.adj_r2 = sst > 0.0
                        ? 1.0 - (1.0 - result.r2_overall) * (static_cast<double>(n) - 1.0) /
                                    static_cast<double>(dof)
                        : 0.0;
    return result;
}

std::string format_fe_table(const std::vector<FeResult>& results) {
    if (results.empty()) return "";
    auto fmt = [](double v, int decimals) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
        return std::string(buf);
    };

    std::string out;
    out += "                ";
    for (const auto& r : results) {
        out += "  Model " + std::to_string(r.depvar + 1) +
               " (" + std::string(kRatingNames[static_cast<std::size_t>(r.depvar)]) + ")";
    }
    out += "\n";
    const std::size_t n_terms = results.front().terms.size();
    for (std::size_t j = 0; j < n_terms; ++j) {
        std::string line = results.front().terms[j].name;
        line.resize(16, ' ');
        for (const auto& r : results) {
            const auto& t = r.terms[j];
            line += "  " + fmt(t.coef, 2) + " " + t.stars + " (" + fmt(t.se, 2) + ")";
        }
        out += line + "\n";
    }
    out += "CCG FE          ";
    for (std::size_t i = 0; i < results.size(); ++i) out += "  YES";
    out += "\nMonth FE        ";
    for (std::size_t i = 0; i < results.size(); ++i) out += "  YES";
    out += "\nR2              ";
    for (const auto& r : results) out += "  " + fmt(r.r2_overall, 2);
    out += "\nAdj R2          ";
    for (const auto& r : results) out += "  " + fmt(r.adj_r2, 2);
    out += "\nNum. Obs.       ";
    for (const auto& r : results) out += "  " + std::to_string(r.n_obs);
    out += "\nSignificance: *** p<0.001, ** p<0.01, * p<0.05; robust SEs in brackets\n";
    return out;
}

}  // namespace satkit
