#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "spillover/corpus.hpp"
#include "spillover/time_util.hpp"

namespace spillover {

struct SubredditScore {
    std::string name;
    double treatment_ratio = 0.0;  // |authors ∩ treatment| / |authors|
    std::size_t author_count = 0;
};

// Subreddits ranked by the share of their authors who are treatment users.
// The target subreddit never appears. Ties break by larger author count,
// then name.
inline std::vector<SubredditScore> rank_control_subreddits(
    const CorpusStore& corpus, const std::set<std::string>& treatment_users,
    const std::string& target_subreddit, std::size_t k = 30) {
    if (treatment_users.empty())
        throw std::invalid_argument("rank_control_subreddits: empty treatment set");
    std::vector<SubredditScore> scores;
    for (const std::string& s : corpus.subreddits()) {
        if (s == target_subreddit) continue;
        auto authors = corpus.authors_of(s);
        if (authors.empty()) continue;
        std::size_t overlap = 0;
        for (const std::string& a : authors)
            if (treatment_users.contains(a)) ++overlap;
        scores.push_back({s, static_cast<double>(overlap) / authors.size(), authors.size()});
    }
    std::sort(scores.begin(), scores.end(), [](const SubredditScore& a, const SubredditScore& b) {
        if (a.treatment_ratio != b.treatment_ratio) return a.treatment_ratio > b.treatment_ratio;
        if (a.author_count != b.author_count) return a.author_count > b.author_count;
        return a.name < b.name;
    });
    if (scores.size() > k) scores.resize(k);
    return scores;
}

// Deterministic uniform subsample: sort, shuffle with the seeded engine,
// truncate.
inline std::vector<std::string> seeded_sample(std::set<std::string> names, std::size_t cap,
                                              std::uint64_t seed) {
    std::vector<std::string> v(names.begin(), names.end());
    std::mt19937_64 rng(seed);
    std::shuffle(v.begin(), v.end(), rng);
    if (v.size() > cap) v.resize(cap);
    return v;
}

// Control candidates: authors of the control subreddits, minus treatment
// members and removed bots, capped at cap_ratio : 1 by seeded sampling.
inline std::vector<std::string> build_control_pool(
    const CorpusStore& corpus, const std::vector<SubredditScore>& control_subreddits,
    const std::set<std::string>& treatment_members, const std::set<std::string>& removed_bots,
    std::size_t n_treatment, std::uint64_t seed, std::size_t cap_ratio = 5) {
    if (control_subreddits.empty())
        throw std::invalid_argument("build_control_pool: no control subreddits");
    std::set<std::string> pool;
    for (const SubredditScore& s : control_subreddits)
        for (const std::string& a : corpus.authors_of(s.name))
            if (!treatment_members.contains(a) && !removed_bots.contains(a)) pool.insert(a);
    if (pool.size() < n_treatment)
        throw std::runtime_error("build_control_pool: pool of " + std::to_string(pool.size()) +
                                 " candidates cannot cover " + std::to_string(n_treatment) +
                                 " treatment users");
    auto sampled = seeded_sample(std::move(pool), cap_ratio * n_treatment, seed);
    std::sort(sampled.begin(), sampled.end());
    return sampled;
}

// Account creation date proxy (day of first observed post), karma as the
// sum of post scores, submission/comment totals, and per-subreddit counts
// over the feature subreddit list. All counts cover posts strictly before
// the first day of `month`.
inline Eigen::VectorXd features_at(const CorpusStore& corpus, const std::string& user,
                                   YearMonth month,
                                   const std::vector<std::string>& feature_subreddits) {
    std::int64_t cutoff_day = first_day_of_month(month);
    Eigen::VectorXd f = Eigen::VectorXd::Zero(4 + static_cast<Eigen::Index>(feature_subreddits.size()));
    std::map<std::string, std::size_t> sub_index;
    for (std::size_t i = 0; i < feature_subreddits.size(); ++i)
        sub_index[feature_subreddits[i]] = i;
    auto posts = corpus.posts_by_author(user);
    // creation-date proxy: first post before the cutoff, so the snapshot
    // never depends on post-activation data; degenerate fallback is the
    // first observed post of users with no pre-cutoff history
    std::int64_t first_day = 0;
    for (const PostRecord* p : posts)
        if (p->day() < cutoff_day) {
            first_day = p->day();
            break;
        }
    if (first_day == 0 && !posts.empty()) first_day = posts.front()->day();
    f[0] = static_cast<double>(first_day);
    for (const PostRecord* p : posts) {
        if (p->day() >= cutoff_day) continue;
        f[1] += static_cast<double>(p->score);
        if (p->kind == PostKind::submission)
            f[2] += 1;
        else
            f[3] += 1;
        if (auto it = sub_index.find(p->subreddit); it != sub_index.end())
            f[4 + static_cast<Eigen::Index>(it->second)] += 1;
    }
    return f;
}

struct CovarianceEstimate {
    Eigen::MatrixXd cov;      // after ridge
    Eigen::MatrixXd inverse;
    Eigen::MatrixXd chol;     // lower factor L with cov = L L'
    double ridge = 0.0;
};

// Sample covariance over the rows of `features`, with a ridge of
// 1e-6 * trace/dim on the diagonal to keep near-constant count features
// invertible.
inline CovarianceEstimate estimate_covariance(const Eigen::MatrixXd& features,
                                              double ridge_scale = 1e-6) {
    const auto n = features.rows();
    const auto d = features.cols();
    if (n < 2) throw std::invalid_argument("estimate_covariance: need at least 2 samples");
    Eigen::RowVectorXd mean = features.colwise().mean();
    Eigen::MatrixXd centered = features.rowwise() - mean;
    CovarianceEstimate est;
    est.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
    est.ridge = ridge_scale * est.cov.trace() / static_cast<double>(d);
    if (est.ridge <= 0) est.ridge = ridge_scale;
    est.cov.diagonal().array() += est.ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(est.cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(
            "estimate_covariance: covariance not positive definite; increase the ridge");
    est.chol = llt.matrixL();
    est.inverse = llt.solve(Eigen::MatrixXd::Identity(d, d));
    return est;
}

inline double mahalanobis_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                   const CovarianceEstimate& cov) {
    if (x.size() != y.size() || x.size() != cov.cov.rows())
        throw std::invalid_argument("mahalanobis_distance: dimension mismatch");
    Eigen::VectorXd diff = x - y;
    Eigen::VectorXd w = cov.chol.triangularView<Eigen::Lower>().solve(diff);
    return w.norm();
}

struct MatchedPair {
    std::string treatment;
    std::string control;
    double distance = 0.0;
    std::int64_t day0 = 0;  // treatment user's first post day in the target subreddit
};

// Day a user first posted in the target subreddit; nullopt when they never
// did.
inline std::optional<std::int64_t> activation_day(const CorpusStore& corpus,
                                                  const std::string& user,
                                                  const std::string& target_subreddit) {
    for (const PostRecord* p : corpus.posts_by_author(user))
        if (p->subreddit == target_subreddit) return p->day();
    return std::nullopt;
}

// Greedy 1:1 nearest-neighbor matching without replacement. Treatment
// users are processed in seeded random order; features and covariance are
// taken per activation month, on the month prior. The matched control
// inherits its partner's day 0.
inline std::vector<MatchedPair> match_pairs(const CorpusStore& corpus,
                                            const std::vector<std::string>& treatments,
                                            const std::vector<std::string>& pool,
                                            const std::string& target_subreddit,
                                            const std::vector<std::string>& feature_subreddits,
                                            std::uint64_t seed) {
    struct Treat {
        std::string user;
        std::int64_t day0;
        YearMonth snapshot_month;
    };
    std::vector<Treat> ts;
    for (const std::string& u : treatments) {
        auto d0 = activation_day(corpus, u, target_subreddit);
        if (!d0) continue;  // never posted in target; not a treatment user
        ts.push_back({u, *d0, year_month_of_day(*d0).prev()});
    }
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(ts.begin(), ts.end(), rng);

    const Eigen::Index dim = 4 + static_cast<Eigen::Index>(feature_subreddits.size());
    std::vector<bool> used(pool.size(), false);

    // per snapshot month: whitened pool features and the covariance used
    struct MonthCache {
        CovarianceEstimate cov;
        Eigen::MatrixXd whitened;  // pool.size() x dim
    };
    std::map<YearMonth, MonthCache> cache;
    auto month_cache = [&](YearMonth m) -> MonthCache& {
        auto it = cache.find(m);
        if (it != cache.end()) return it->second;
        Eigen::MatrixXd feats(static_cast<Eigen::Index>(pool.size()), dim);
        for (std::size_t i = 0; i < pool.size(); ++i)
            feats.row(static_cast<Eigen::Index>(i)) =
                features_at(corpus, pool[i], m, feature_subreddits).transpose();
        MonthCache mc;
        mc.cov = estimate_covariance(feats);
        mc.whitened.resize(feats.rows(), dim);
        for (Eigen::Index i = 0; i < feats.rows(); ++i)
            mc.whitened.row(i) = mc.cov.chol.triangularView<Eigen::Lower>()
                                     .solve(feats.row(i).transpose())
                                     .transpose();
        return cache.emplace(m, std::move(mc)).first->second;
    };

    std::vector<MatchedPair> pairs;
    for (const Treat& t : ts) {
        MonthCache& mc = month_cache(t.snapshot_month);
        Eigen::VectorXd tf = features_at(corpus, t.user, t.snapshot_month, feature_subreddits);
        Eigen::VectorXd tw = mc.cov.chol.triangularView<Eigen::Lower>().solve(tf);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            double d = (mc.whitened.row(static_cast<Eigen::Index>(i)).transpose() - tw).norm();
            if (d < best || (d == best && best_i < pool.size() && pool[i] < pool[best_i])) {
                best = d;
                best_i = i;
            }
        }
        if (best_i == pool.size())
            throw std::runtime_error("match_pairs: control pool exhausted after " +
                                     std::to_string(pairs.size()) + " pairs");
        used[best_i] = true;
        pairs.push_back({t.user, pool[best_i], best, t.day0});
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const MatchedPair& a, const MatchedPair& b) { return a.treatment < b.treatment; });
    return pairs;
}

}  // namespace spillover
