#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spillover/corpus.hpp"
#include "spillover/io_util.hpp"
#include "spillover/sage.hpp"
#include "spillover/tokenize.hpp"

namespace spillover {

struct RatedWord {
    std::string word;
    int ratings[3] = {0, 0, 0};  // each in {0,1,2}

    int sum() const { return ratings[0] + ratings[1] + ratings[2]; }
};

struct LexiconEntry {
    double eta = 0.0;
    int rating_sum = 0;
};

struct HateLexicon {
    std::string community;
    std::map<std::string, LexiconEntry> words;

    bool contains(const std::string& w) const { return words.contains(w); }
    std::size_t size() const { return words.size(); }
};

// Ratings file: TSV  word \t r1 \t r2 \t r3
inline std::map<std::string, RatedWord> load_ratings(const std::filesystem::path& path) {
    std::map<std::string, RatedWord> out;
    for_each_line(path, [&](std::string_view line) {
        if (line.empty() || line.front() == '#') return;
        std::istringstream ss{std::string(line)};
        RatedWord rw;
        if (!(ss >> rw.word >> rw.ratings[0] >> rw.ratings[1] >> rw.ratings[2]))
            throw std::runtime_error("malformed ratings line: " + std::string(line));
        out[rw.word] = rw;
    });
    return out;
}

// Keeps candidates whose three ratings sum to 4 or more.
inline HateLexicon apply_ratings(const std::vector<Candidate>& candidates,
                                 const std::map<std::string, RatedWord>& ratings,
                                 const std::string& community = "") {
    std::vector<std::string> missing;
    for (const Candidate& c : candidates)
        if (!ratings.contains(c.word)) missing.push_back(c.word);
    if (!missing.empty()) {
        std::string msg = "candidates missing from ratings table:";
        for (const auto& w : missing) msg += " " + w;
        throw std::runtime_error(msg);
    }
    HateLexicon lex;
    lex.community = community;
    for (const Candidate& c : candidates) {
        const RatedWord& rw = ratings.at(c.word);
        for (int r : rw.ratings)
            if (r < 0 || r > 2)
                throw std::runtime_error("rating outside {0,1,2} for word: " + c.word);
        if (rw.sum() >= 4) lex.words[c.word] = {c.eta, rw.sum()};
    }
    return lex;
}

// Lexicon file: TSV  word \t eta \t rating_sum, sorted by eta descending.
inline void save_lexicon(const HateLexicon& lex, const std::filesystem::path& path) {
    std::vector<std::pair<std::string, LexiconEntry>> rows(lex.words.begin(), lex.words.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.second.eta != b.second.eta) return a.second.eta > b.second.eta;
        return a.first < b.first;
    });
    std::ostringstream out;
    for (const auto& [w, e] : rows)
        out << w << '\t' << fmt_g(e.eta) << '\t' << e.rating_sum << '\n';
    atomic_write(path, out.str());
}

inline HateLexicon load_lexicon(const std::filesystem::path& path,
                                const std::string& community = "") {
    HateLexicon lex;
    lex.community = community;
    for_each_line(path, [&](std::string_view line) {
        if (line.empty()) return;
        std::istringstream ss{std::string(line)};
        std::string word;
        LexiconEntry e;
        if (!(ss >> word >> e.eta >> e.rating_sum))
            throw std::runtime_error("malformed lexicon line: " + std::string(line));
        lex.words[word] = e;
    });
    return lex;
}

// Multiset fraction of tokens that are lexicon words. Undefined on an
// empty token list; callers skip those days.
inline double hate_ratio(const std::vector<std::string>& tokens, const HateLexicon& lexicon) {
    if (tokens.empty()) throw std::invalid_argument("hate_ratio: empty token list");
    std::size_t hits = 0;
    for (const std::string& t : tokens)
        if (lexicon.contains(t)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

enum class Scope { all, inside_target, outside_target, banned, non_banned };

inline Scope scope_from_string(const std::string& s) {
    if (s == "all") return Scope::all;
    if (s == "inside") return Scope::inside_target;
    if (s == "outside") return Scope::outside_target;
    if (s == "banned") return Scope::banned;
    if (s == "non-banned") return Scope::non_banned;
    throw std::invalid_argument("unknown scope label: " + s);
}

inline std::string to_string(Scope s) {
    switch (s) {
        case Scope::all: return "all";
        case Scope::inside_target: return "inside";
        case Scope::outside_target: return "outside";
        case Scope::banned: return "banned";
        case Scope::non_banned: return "non-banned";
    }
    return "?";
}

struct DailyPoint {
    std::string user;
    std::int64_t day = 0;       // days since epoch
    std::int64_t rel_day = 0;   // day - day0
    double ratio = 0.0;
    std::size_t token_count = 0;
    Scope scope = Scope::all;
};

struct ScopeFilter {
    std::string target_subreddit;
    const std::set<std::string>* banned = nullptr;  // required for banned scopes

    bool admits(Scope scope, const std::string& subreddit) const {
        switch (scope) {
            case Scope::all: return true;
            case Scope::inside_target: return subreddit == target_subreddit;
            case Scope::outside_target: return subreddit != target_subreddit;
            case Scope::banned:
            case Scope::non_banned:
                if (!banned) throw std::runtime_error("banned-subreddit list not loaded");
                return banned->contains(subreddit) == (scope == Scope::banned);
        }
        return false;
    }
};

// One point per UTC calendar day with at least one in-scope token,
// relative to the user's day 0. Ordered by day.
inline std::vector<DailyPoint> daily_series(const CorpusStore& corpus, const std::string& user,
                                            const HateLexicon& lexicon, Scope scope,
                                            const ScopeFilter& filter, std::int64_t day0,
                                            const StopwordSet& stopwords = default_stopwords()) {
    struct DayAgg {
        std::size_t tokens = 0;
        std::size_t hits = 0;
    };
    std::map<std::int64_t, DayAgg> days;
    for (const PostRecord* post : corpus.posts_by_author(user)) {
        if (!filter.admits(scope, post->subreddit)) continue;
        auto tokens = tokenize(post->body, stopwords);
        if (tokens.empty()) continue;
        DayAgg& agg = days[post->day()];
        agg.tokens += tokens.size();
        for (const std::string& t : tokens)
            if (lexicon.contains(t)) ++agg.hits;
    }
    std::vector<DailyPoint> out;
    out.reserve(days.size());
    for (const auto& [day, agg] : days) {
        DailyPoint p;
        p.user = user;
        p.day = day;
        p.rel_day = day - day0;
        p.ratio = static_cast<double>(agg.hits) / static_cast<double>(agg.tokens);
        p.token_count = agg.tokens;
        p.scope = scope;
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace spillover
