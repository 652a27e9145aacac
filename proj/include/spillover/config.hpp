#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spillover/io_util.hpp"

namespace spillover {

// Flat sectioned key-value run configuration. Defaults reproduce the
// paper-style methodology (top-300 candidates, 30 control subreddits,
// 50 feature subreddits, 5:1 pool cap, 15k treatment cap, bandwidths
// 30..365 step 5, 100 CV rounds), so an empty file is a valid config
// apart from the required input paths and target community.
struct RunConfig {
    // [input]
    std::vector<std::filesystem::path> dumps;
    std::filesystem::path background;
    std::filesystem::path stopwords;       // empty = built-in list
    std::filesystem::path ratings;
    std::filesystem::path banned;          // optional
    std::filesystem::path confirmed_bots;  // optional
    std::string target;

    // [lexicon]
    double lambda = -1.0;  // < 0 selects sqrt(total target tokens)
    std::size_t top_k = 300;

    // [cohort]
    std::size_t control_subreddits = 30;
    std::size_t feature_subreddits = 50;
    std::size_t cap_ratio = 5;
    std::size_t treatment_cap = 15000;
    std::uint64_t seed = 42;

    // [its]
    std::int64_t bandwidth_min = 30;
    std::int64_t bandwidth_max = 365;
    std::int64_t bandwidth_step = 5;
    int cv_rounds = 100;
    std::string granularity = "user-day";  // or "group-day"
    bool token_weighted = false;

    // [synth]
    std::uint64_t synth_seed = 1;
    std::size_t synth_treatment = 40;
    std::size_t synth_decoys = 4;
    int synth_horizon = 120;
    std::size_t synth_tokens_per_day = 1000;
    std::string synth_noise = "exact";
    std::vector<double> synth_beta = {0.002, 0.0, 0.001, 0.0002, 0.0, 0.0, 0.0007, 0.0};
    std::size_t synth_vocab = 200;
    std::size_t synth_hate_words = 10;
    double synth_boost = 10.0;

    // [output]
    std::filesystem::path out_dir = "out";
    unsigned threads = 0;  // 0 = hardware default

    std::vector<std::int64_t> bandwidth_grid() const {
        std::vector<std::int64_t> g;
        for (std::int64_t b = bandwidth_min; b <= bandwidth_max; b += bandwidth_step)
            g.push_back(b);
        return g;
    }

    void require_target() const {
        if (target.empty())
            throw std::runtime_error("config error: input.target (target subreddit) is not set");
    }

    std::string snapshot() const;
};

namespace detail {

inline std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) {
        part = trim(part);
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = section + "." + detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));

        auto as_u64 = [&] { return std::stoull(val); };
        auto as_i64 = [&] { return std::stoll(val); };
        auto as_f = [&] { return std::stod(val); };
        auto as_bool = [&] {
            if (val == "true" || val == "1") return true;
            if (val == "false" || val == "0") return false;
            throw std::runtime_error("config key " + key + ": expected true/false");
        };

        if (key == "input.dumps") {
            cfg.dumps.clear();
            for (const auto& p : detail::split(val, ';')) cfg.dumps.emplace_back(p);
        } else if (key == "input.background") cfg.background = val;
        else if (key == "input.stopwords") cfg.stopwords = val;
        else if (key == "input.ratings") cfg.ratings = val;
        else if (key == "input.banned") cfg.banned = val;
        else if (key == "input.confirmed_bots") cfg.confirmed_bots = val;
        else if (key == "input.target") cfg.target = val;
        else if (key == "lexicon.lambda") cfg.lambda = as_f();
        else if (key == "lexicon.top_k") cfg.top_k = as_u64();
        else if (key == "cohort.control_subreddits") cfg.control_subreddits = as_u64();
        else if (key == "cohort.feature_subreddits") cfg.feature_subreddits = as_u64();
        else if (key == "cohort.cap_ratio") cfg.cap_ratio = as_u64();
        else if (key == "cohort.treatment_cap") cfg.treatment_cap = as_u64();
        else if (key == "cohort.seed") cfg.seed = as_u64();
        else if (key == "its.bandwidth_min") cfg.bandwidth_min = as_i64();
        else if (key == "its.bandwidth_max") cfg.bandwidth_max = as_i64();
        else if (key == "its.bandwidth_step") cfg.bandwidth_step = as_i64();
        else if (key == "its.cv_rounds") cfg.cv_rounds = static_cast<int>(as_i64());
        else if (key == "its.granularity") {
            if (val != "user-day" && val != "group-day")
                throw std::runtime_error("config key its.granularity: expected user-day or group-day");
            cfg.granularity = val;
        } else if (key == "its.token_weighted") cfg.token_weighted = as_bool();
        else if (key == "synth.seed") cfg.synth_seed = as_u64();
        else if (key == "synth.treatment_users") cfg.synth_treatment = as_u64();
        else if (key == "synth.decoys_per_treatment") cfg.synth_decoys = as_u64();
        else if (key == "synth.horizon_days") cfg.synth_horizon = static_cast<int>(as_i64());
        else if (key == "synth.tokens_per_day") cfg.synth_tokens_per_day = as_u64();
        else if (key == "synth.noise") {
            if (val != "exact" && val != "bernoulli")
                throw std::runtime_error("config key synth.noise: expected exact or bernoulli");
            cfg.synth_noise = val;
        } else if (key == "synth.beta") {
            auto parts = detail::split(val, ',');
            if (parts.size() != 8)
                throw std::runtime_error("config key synth.beta: expected 8 comma-separated values");
            cfg.synth_beta.clear();
            for (const auto& p : parts) cfg.synth_beta.push_back(std::stod(p));
        } else if (key == "synth.vocab_size") cfg.synth_vocab = as_u64();
        else if (key == "synth.hate_words") cfg.synth_hate_words = as_u64();
        else if (key == "synth.boost") cfg.synth_boost = as_f();
        else if (key == "output.dir") cfg.out_dir = val;
        else if (key == "output.threads") cfg.threads = static_cast<unsigned>(as_u64());
        else
            throw std::runtime_error("config error: unknown key " + key);
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_file(path));
}

inline std::string RunConfig::snapshot() const {
    std::ostringstream s;
    s << "[input]\n";
    s << "dumps = ";
    for (std::size_t i = 0; i < dumps.size(); ++i) s << (i ? ";" : "") << dumps[i].string();
    s << "\n";
    s << "background = " << background.string() << "\n";
    s << "stopwords = " << stopwords.string() << "\n";
    s << "ratings = " << ratings.string() << "\n";
    s << "banned = " << banned.string() << "\n";
    s << "confirmed_bots = " << confirmed_bots.string() << "\n";
    s << "target = " << target << "\n";
    s << "[lexicon]\n";
    s << "lambda = " << fmt_g(lambda) << "\ntop_k = " << top_k << "\n";
    s << "[cohort]\n";
    s << "control_subreddits = " << control_subreddits << "\n";
    s << "feature_subreddits = " << feature_subreddits << "\n";
    s << "cap_ratio = " << cap_ratio << "\n";
    s << "treatment_cap = " << treatment_cap << "\n";
    s << "seed = " << seed << "\n";
    s << "[its]\n";
    s << "bandwidth_min = " << bandwidth_min << "\n";
    s << "bandwidth_max = " << bandwidth_max << "\n";
    s << "bandwidth_step = " << bandwidth_step << "\n";
    s << "cv_rounds = " << cv_rounds << "\n";
    s << "granularity = " << granularity << "\n";
    s << "token_weighted = " << (token_weighted ? "true" : "false") << "\n";
    s << "[synth]\n";
    s << "seed = " << synth_seed << "\n";
    s << "treatment_users = " << synth_treatment << "\n";
    s << "decoys_per_treatment = " << synth_decoys << "\n";
    s << "horizon_days = " << synth_horizon << "\n";
    s << "tokens_per_day = " << synth_tokens_per_day << "\n";
    s << "noise = " << synth_noise << "\n";
    s << "beta = ";
    for (std::size_t i = 0; i < synth_beta.size(); ++i)
        s << (i ? "," : "") << fmt_g(synth_beta[i]);
    s << "\n";
    s << "vocab_size = " << synth_vocab << "\n";
    s << "hate_words = " << synth_hate_words << "\n";
    s << "boost = " << fmt_g(synth_boost) << "\n";
    s << "[output]\n";
    s << "dir = " << out_dir.string() << "\n";
    s << "threads = " << threads << "\n";
    return s.str();
}

}  // namespace spillover
