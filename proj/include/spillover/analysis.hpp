#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "spillover/cohort.hpp"
#include "spillover/corpus.hpp"
#include "spillover/lexicon.hpp"
#include "spillover/stats.hpp"

namespace spillover {

struct ContextSeries {
    std::string label;  // scope name, or "control" for the matched-control series
    // relative day -> (mean of user-day hate ratios, number of user-days)
    std::map<std::int64_t, std::pair<double, std::size_t>> daily;
};

namespace detail {

inline void accumulate_series(ContextSeries& series,
                              const std::vector<DailyPoint>& points) {
    for (const DailyPoint& p : points) {
        auto& [mean, n] = series.daily[p.rel_day];
        mean = (mean * n + p.ratio) / (n + 1);
        ++n;
    }
}

}  // namespace detail

// Daily mean hate-ratio series for every scope over the treatment cohort,
// plus an all-scope series over the matched controls. Banned scopes are
// skipped (with a note in `warnings`) when no banned list is available.
inline std::vector<ContextSeries> context_series(const CorpusStore& corpus,
                                                 const std::vector<MatchedPair>& pairs,
                                                 const HateLexicon& lexicon,
                                                 const std::string& target_subreddit,
                                                 const std::set<std::string>* banned_list,
                                                 const StopwordSet& stopwords,
                                                 std::vector<std::string>* warnings = nullptr) {
    ScopeFilter filter{target_subreddit, banned_list};
    std::vector<Scope> scopes = {Scope::all, Scope::inside_target, Scope::outside_target};
    if (banned_list) {
        scopes.push_back(Scope::banned);
        scopes.push_back(Scope::non_banned);
    } else if (warnings) {
        warnings->push_back("banned-subreddit list missing; banned/non-banned series skipped");
    }

    std::vector<ContextSeries> out;
    for (Scope scope : scopes) {
        ContextSeries series;
        series.label = to_string(scope);
        for (const MatchedPair& pair : pairs)
            detail::accumulate_series(
                series, daily_series(corpus, pair.treatment, lexicon, scope, filter, pair.day0,
                                     stopwords));
        out.push_back(std::move(series));
    }
    ContextSeries control;
    control.label = "control";
    for (const MatchedPair& pair : pairs)
        detail::accumulate_series(
            control,
            daily_series(corpus, pair.control, lexicon, Scope::all, filter, pair.day0, stopwords));
    out.push_back(std::move(control));
    return out;
}

struct LifespanSplit {
    std::int64_t threshold_days = 365;
    // mean of post-join (rel_day >= 0) user-day hate ratios per group;
    // absent when the group is empty
    std::optional<double> short_lived_mean;
    std::optional<double> long_lived_mean;
    std::size_t short_lived_users = 0;
    std::size_t long_lived_users = 0;
};

// Splits treatment users by account lifespan: last post anywhere on Reddit
// at most `threshold_days` after day 0 versus later.
inline LifespanSplit lifespan_split(const CorpusStore& corpus,
                                    const std::vector<MatchedPair>& pairs,
                                    const HateLexicon& lexicon,
                                    const std::string& target_subreddit,
                                    const StopwordSet& stopwords,
                                    std::int64_t threshold_days = 365) {
    LifespanSplit split;
    split.threshold_days = threshold_days;
    ScopeFilter filter{target_subreddit, nullptr};
    double sums[2] = {0, 0};
    std::size_t counts[2] = {0, 0};
    for (const MatchedPair& pair : pairs) {
        auto posts = corpus.posts_by_author(pair.treatment);
        if (posts.empty()) continue;
        std::int64_t last_day = posts.back()->day();
        bool short_lived = (last_day - pair.day0) <= threshold_days;
        (short_lived ? split.short_lived_users : split.long_lived_users)++;
        for (const DailyPoint& p : daily_series(corpus, pair.treatment, lexicon, Scope::all,
                                                filter, pair.day0, stopwords)) {
            if (p.rel_day < 0) continue;
            sums[short_lived ? 0 : 1] += p.ratio;
            counts[short_lived ? 0 : 1] += 1;
        }
    }
    if (counts[0] > 0) split.short_lived_mean = sums[0] / counts[0];
    if (counts[1] > 0) split.long_lived_mean = sums[1] / counts[1];
    return split;
}

// Relative frequency of each lexicon word among lexicon-word tokens in
// scope, over treatment users' post-join (rel_day >= 0) posts. Frequencies
// sum to 1 over the lexicon.
inline std::map<std::string, double> word_distribution(const CorpusStore& corpus,
                                                       const std::vector<MatchedPair>& pairs,
                                                       const HateLexicon& lexicon, Scope scope,
                                                       const std::string& target_subreddit,
                                                       const StopwordSet& stopwords,
                                                       const std::set<std::string>* banned_list
                                                       = nullptr) {
    ScopeFilter filter{target_subreddit, banned_list};
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const MatchedPair& pair : pairs) {
        for (const PostRecord* post : corpus.posts_by_author(pair.treatment)) {
            if (post->day() < pair.day0) continue;
            if (!filter.admits(scope, post->subreddit)) continue;
            for (const std::string& t : tokenize(post->body, stopwords))
                if (lexicon.contains(t)) {
                    ++counts[t];
                    ++total;
                }
        }
    }
    if (total == 0)
        throw std::runtime_error("word_distribution: no lexicon hits in scope " +
                                 to_string(scope));
    std::map<std::string, double> out;
    for (const auto& [w, c] : counts)
        out[w] = static_cast<double>(c) / static_cast<double>(total);
    return out;
}

// Aligns two word-frequency tables on their shared words and runs the
// Spearman test.
inline RankCorrelation compare_distributions(const std::map<std::string, double>& a,
                                             const std::map<std::string, double>& b) {
    std::vector<double> va, vb;
    for (const auto& [w, fa] : a)
        if (auto it = b.find(w); it != b.end()) {
            va.push_back(fa);
            vb.push_back(it->second);
        }
    return spearman(va, vb);
}

}  // namespace spillover
