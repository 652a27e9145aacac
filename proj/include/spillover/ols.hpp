#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/stats.hpp"

namespace spillover {

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd std_err;
    Eigen::VectorXd t_stat;
    Eigen::VectorXd p_value;
    double f_stat = 0.0;    // joint significance of all non-constant terms
    double f_pvalue = 1.0;
    double sigma2 = 0.0;
    std::size_t n = 0;
    std::size_t k = 0;

    // 95% confidence half-width for coefficient i (normal approximation
    // is not used; the t quantile comes from inverting the CDF).
    double ci_halfwidth(std::size_t i, double level = 0.95) const;
};

namespace detail {

// Quantile of Student-t via bisection on the CDF; plenty for report output.
inline double t_quantile_two_sided(double level, double df) {
    double alpha = 1.0 - level;
    double lo = 0.0, hi = 1e3;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (t_pvalue(mid, df) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline double OlsFit::ci_halfwidth(std::size_t i, double level) const {
    return std_err[static_cast<Eigen::Index>(i)] *
           detail::t_quantile_two_sided(level, static_cast<double>(n - k));
}

// Least squares by column-pivoted Householder QR, classical inference:
// se from sigma^2 (X'X)^-1, two-sided t p-values with n-k df, Wald F over
// all non-constant columns (column 0 is the intercept).
inline OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const std::vector<std::string>* column_names = nullptr) {
    const auto n = X.rows();
    const auto k = X.cols();
    if (n <= k) throw std::invalid_argument("fit_ols: need more rows than columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) {
        std::string msg = "fit_ols: rank-deficient design; dependent columns:";
        auto perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < k; ++i) {
            Eigen::Index col = perm[i];
            if (column_names && static_cast<std::size_t>(col) < column_names->size())
                msg += " " + (*column_names)[static_cast<std::size_t>(col)];
            else
                msg += " #" + std::to_string(col);
        }
        throw std::runtime_error(msg);
    }

    OlsFit fit;
    fit.n = static_cast<std::size_t>(n);
    fit.k = static_cast<std::size_t>(k);
    fit.beta = qr.solve(y);
    Eigen::VectorXd resid = y - X * fit.beta;
    double rss = resid.squaredNorm();
    double df = static_cast<double>(n - k);
    fit.sigma2 = rss / df;

    Eigen::MatrixXd xtx_inv =
        (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    fit.std_err.resize(k);
    fit.t_stat.resize(k);
    fit.p_value.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        fit.std_err[i] = std::sqrt(fit.sigma2 * xtx_inv(i, i));
        fit.t_stat[i] = fit.std_err[i] > 0 ? fit.beta[i] / fit.std_err[i] : 0.0;
        fit.p_value[i] = t_pvalue(fit.t_stat[i], df);
    }

    double ymean = y.mean();
    double tss = (y.array() - ymean).matrix().squaredNorm();
    double df1 = static_cast<double>(k - 1);
    if (tss > rss && df1 > 0) {
        fit.f_stat = ((tss - rss) / df1) / (rss / df);
        fit.f_pvalue = f_pvalue(fit.f_stat, df1, df);
    } else {
        fit.f_stat = 0.0;
        fit.f_pvalue = 1.0;
    }
    return fit;
}

}  // namespace spillover
