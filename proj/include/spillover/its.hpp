#pragma once

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstdint>
#include <map>
#include <thread>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/lexicon.hpp"
#include "spillover/ols.hpp"

namespace spillover {

// One regression row before expansion into the 8-column design.
struct Observation {
    std::int64_t t = 0;  // relative day, negative = pre-treatment
    bool exposed = false;
    double y = 0.0;       // hate ratio
    double weight = 1.0;  // daily token count when weighting is enabled

    bool interrupted() const { return t >= 0; }
};

inline const std::vector<std::string>& its_term_names() {
    static const std::vector<std::string> names = {
        "const", "time", "expos", "inter", "time_x_expos", "time_x_inter",
        "expos_x_inter", "time_x_expos_x_inter"};
    return names;
}

struct ItsFit {
    OlsFit ols;
    std::int64_t bandwidth = 0;

    double coef(std::size_t i) const { return ols.beta[static_cast<Eigen::Index>(i)]; }
    // Predicted hate ratio for a (group, period, day) combination; the four
    // piecewise regression lines are linear combinations of the coefficients.
    double predict(bool exposed, bool interrupted, double t) const {
        double e = exposed ? 1.0 : 0.0, i = interrupted ? 1.0 : 0.0;
        const auto& b = ols.beta;
        return b[0] + b[1] * t + b[2] * e + b[3] * i + b[4] * t * e + b[5] * t * i +
               b[6] * e * i + b[7] * t * e * i;
    }
};

enum class Granularity { user_day, group_day };

// Expands observations inside [-B, B] into the 8-column interaction design.
// Both groups must contribute pre and post rows or the model is
// unidentifiable.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> build_design(
    const std::vector<Observation>& obs, std::int64_t bandwidth, bool token_weighted = false) {
    if (bandwidth < 30) throw std::invalid_argument("bandwidth must be >= 30");
    std::size_t rows = 0;
    bool pre[2] = {false, false}, post[2] = {false, false};
    for (const Observation& o : obs) {
        if (std::abs(o.t) > bandwidth) continue;
        ++rows;
        (o.interrupted() ? post : pre)[o.exposed ? 1 : 0] = true;
    }
    for (int g = 0; g < 2; ++g)
        if (!pre[g] || !post[g])
            throw std::runtime_error(std::string("build_design: ") +
                                     (g ? "treatment" : "control") +
                                     " group lacks pre or post observations in window");
    Eigen::MatrixXd X(rows, 8);
    Eigen::VectorXd y(rows);
    std::size_t r = 0;
    for (const Observation& o : obs) {
        if (std::abs(o.t) > bandwidth) continue;
        double t = static_cast<double>(o.t);
        double e = o.exposed ? 1.0 : 0.0;
        double i = o.interrupted() ? 1.0 : 0.0;
        double w = token_weighted ? std::sqrt(o.weight) : 1.0;
        X(r, 0) = w;
        X(r, 1) = w * t;
        X(r, 2) = w * e;
        X(r, 3) = w * i;
        X(r, 4) = w * t * e;
        X(r, 5) = w * t * i;
        X(r, 6) = w * e * i;
        X(r, 7) = w * t * e * i;
        y(r) = w * o.y;
        ++r;
    }
    return {std::move(X), std::move(y)};
}

inline ItsFit fit_its(const std::vector<Observation>& obs, std::int64_t bandwidth,
                      bool token_weighted = false) {
    auto [X, y] = build_design(obs, bandwidth, token_weighted);
    ItsFit fit;
    fit.ols = fit_ols(X, y, &its_term_names());
    fit.bandwidth = bandwidth;
    return fit;
}

// Instantaneous post-join jump relative to the pre-join treatment baseline,
// in percent: 100 * (inter + expos_x_inter) / (const + expos).
inline double relative_increase(const ItsFit& fit) {
    double baseline = fit.coef(0) + fit.coef(2);
    if (baseline <= 0.0)
        throw std::runtime_error("relative_increase: non-positive pre-treatment baseline");
    return 100.0 * (fit.coef(3) + fit.coef(6)) / baseline;
}

// Collapses user-day observations to per-(group, day) means.
inline std::vector<Observation> to_group_day(const std::vector<Observation>& obs) {
    std::map<std::pair<std::int64_t, bool>, std::pair<double, std::size_t>> acc;
    for (const Observation& o : obs) {
        auto& [sum, count] = acc[{o.t, o.exposed}];
        sum += o.y;
        ++count;
    }
    std::vector<Observation> out;
    out.reserve(acc.size());
    for (const auto& [key, sc] : acc)
        out.push_back({key.first, key.second, sc.first / sc.second, 1.0});
    return out;
}

// Daily mean series for one group over relative days; input to bandwidth CV.
inline std::map<std::int64_t, double> group_mean_series(const std::vector<Observation>& obs,
                                                        bool exposed) {
    std::map<std::int64_t, std::pair<double, std::size_t>> acc;
    for (const Observation& o : obs)
        if (o.exposed == exposed) {
            auto& [sum, count] = acc[o.t];
            sum += o.y;
            ++count;
        }
    std::map<std::int64_t, double> out;
    for (const auto& [t, sc] : acc) out[t] = sc.first / sc.second;
    return out;
}

struct BandwidthSearch {
    std::vector<std::int64_t> candidates;
    std::vector<double> rmse;  // aligned with candidates
    int rounds = 0;
    std::int64_t selected = 0;
};

inline std::vector<std::int64_t> default_bandwidth_grid() {
    std::vector<std::int64_t> out;
    for (std::int64_t b = 30; b <= 365; b += 5) out.push_back(b);
    return out;
}

// Leave-one-out rolling-origin CV on the pre-treatment daily mean series.
// For bandwidth B and round r, fit a simple linear regression on days
// [-(B+r), -(r+1)] and predict day -r; score by RMSE over rounds. Smallest
// RMSE wins, ties go to the larger bandwidth.
inline BandwidthSearch cv_bandwidth(const std::map<std::int64_t, double>& pre_series,
                                    std::vector<std::int64_t> candidates = default_bandwidth_grid(),
                                    int rounds = 100) {
    BandwidthSearch search;
    search.rounds = rounds;
    if (candidates.empty()) throw std::invalid_argument("cv_bandwidth: no candidates");
    std::sort(candidates.begin(), candidates.end());
    for (std::int64_t b : candidates)
        if (b < 30) throw std::invalid_argument("cv_bandwidth: bandwidths below 30 not studied");

    std::int64_t needed = candidates.back() + rounds;
    for (std::int64_t d = -needed; d <= -1; ++d) {
        if (!pre_series.contains(d)) {
            // report the largest candidate the available coverage supports
            std::int64_t min_day = 0;
            for (std::int64_t dd = -1; dd >= -needed; --dd) {
                if (!pre_series.contains(dd)) break;
                min_day = dd;
            }
            std::int64_t feasible = -min_day - rounds;
            throw std::runtime_error(
                "cv_bandwidth: pre-period series missing day " + std::to_string(d) +
                "; maximum feasible candidate with " + std::to_string(rounds) +
                " rounds is " + std::to_string(feasible));
        }
    }

    search.candidates = candidates;
    search.rmse.resize(candidates.size());
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        std::int64_t B = candidates[ci];
        double sq = 0.0;
        for (int r = 1; r <= rounds; ++r) {
            // simple regression y = a + b*t on the window
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            std::int64_t lo = -(B + r), hi = -(r + 1);
            double n = static_cast<double>(hi - lo + 1);
            for (std::int64_t d = lo; d <= hi; ++d) {
                double x = static_cast<double>(d), yv = pre_series.at(d);
                sx += x;
                sy += yv;
                sxx += x * x;
                sxy += x * yv;
            }
            double denom = n * sxx - sx * sx;
            double slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
            double intercept = (sy - slope * sx) / n;
            double pred = intercept + slope * static_cast<double>(-r);
            double err = pred - pre_series.at(-r);
            sq += err * err;
        }
        search.rmse[ci] = std::sqrt(sq / rounds);
    }

    // argmin RMSE; ties (within floating-point noise) go to the largest
    // bandwidth
    double min_rmse = *std::min_element(search.rmse.begin(), search.rmse.end());
    double tie_eps = 1e-12 * (1.0 + min_rmse);
    std::size_t best = 0;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci)
        if (search.rmse[ci] <= min_rmse + tie_eps) best = ci;
    search.selected = candidates[best];
    return search;
}

struct SweepRow {
    std::int64_t bandwidth = 0;
    bool ok = false;
    std::string error;
    ItsFit fit;
};

// Refits the model at every bandwidth; individual failures are recorded and
// the sweep continues. Fits run in parallel, results ordered by bandwidth.
inline std::vector<SweepRow> sensitivity_sweep(
    const std::vector<Observation>& obs,
    std::vector<std::int64_t> bandwidths = default_bandwidth_grid(),
    bool token_weighted = false, unsigned threads = 0) {
    std::sort(bandwidths.begin(), bandwidths.end());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SweepRow> rows(bandwidths.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= bandwidths.size()) return;
            rows[i].bandwidth = bandwidths[i];
            try {
                rows[i].fit = fit_its(obs, bandwidths[i], token_weighted);
                rows[i].ok = true;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

}  // namespace spillover
