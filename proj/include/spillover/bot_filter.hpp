#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace spillover {

inline const std::vector<std::string>& default_bot_keywords() {
    static const std::vector<std::string> kw = {"bot", "auto", "transcriber",
                                                "gif", "link", "twitter"};
    return kw;
}

struct BotFilterReport {
    // flagged username -> keywords matched as case-insensitive substrings
    std::map<std::string, std::vector<std::string>> flagged;
    // names actually removed downstream: the confirmed list when one was
    // supplied, otherwise every flagged name
    std::set<std::string> removed;
    double removal_fraction = 0.0;

    bool is_removed(const std::string& name) const { return removed.contains(name); }
};

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline BotFilterReport filter_bots(const std::set<std::string>& usernames,
                                   const std::vector<std::string>& keywords = default_bot_keywords(),
                                   const std::set<std::string>* confirmed_bots = nullptr) {
    if (keywords.empty()) throw std::invalid_argument("bot keyword list must be non-empty");
    BotFilterReport report;
    for (const std::string& name : usernames) {
        std::string lower = to_lower(name);
        std::vector<std::string> hits;
        for (const std::string& kw : keywords)
            if (lower.find(to_lower(kw)) != std::string::npos) hits.push_back(kw);
        if (!hits.empty()) report.flagged.emplace(name, std::move(hits));
    }
    if (confirmed_bots) {
        for (const std::string& name : *confirmed_bots)
            if (usernames.contains(name)) report.removed.insert(name);
    } else {
        for (const auto& [name, _] : report.flagged) report.removed.insert(name);
    }
    report.removal_fraction =
        usernames.empty() ? 0.0
                          : static_cast<double>(report.removed.size()) / usernames.size();
    return report;
}

}  // namespace spillover
