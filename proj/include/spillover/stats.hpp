#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace spillover {

namespace detail {

// Continued-fraction regularized incomplete beta I_x(a, b), modified
// Lentz evaluation. Accurate to ~1e-14 over the parameter ranges used
// for t and F tail probabilities.
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double eps = 1e-15;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

inline double incomplete_beta(double a, double b, double x) {
    if (a <= 0 || b <= 0) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a Student-t statistic with df degrees of freedom.
inline double t_pvalue(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

// Upper-tail p-value of an F statistic with (df1, df2) degrees of freedom.
inline double f_pvalue(double f, double df1, double df2) {
    if (!std::isfinite(f)) return 0.0;
    if (f <= 0.0) return 1.0;
    return incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::invalid_argument("pearson: need two vectors of equal length >= 2");
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0)
        throw std::invalid_argument("pearson: constant vector, correlation undefined");
    return sab / std::sqrt(saa * sbb);
}

// Average ranks, ties receive the mean of the positions they span.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

struct RankCorrelation {
    double rho = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// Spearman rho = Pearson correlation of tie-averaged rank vectors;
// p-value from t = rho * sqrt((n-2)/(1-rho^2)) with n-2 df.
inline RankCorrelation spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 3) throw std::invalid_argument("spearman: need n >= 3");
    RankCorrelation rc;
    rc.n = a.size();
    rc.rho = pearson(average_ranks(a), average_ranks(b));
    double n = static_cast<double>(rc.n);
    if (std::abs(rc.rho) >= 1.0) {
        rc.p_value = 0.0;
    } else {
        double t = rc.rho * std::sqrt((n - 2.0) / (1.0 - rc.rho * rc.rho));
        rc.p_value = t_pvalue(t, n - 2.0);
    }
    return rc;
}

}  // namespace spillover
