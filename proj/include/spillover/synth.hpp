#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spillover/io_util.hpp"
#include "spillover/its.hpp"
#include "spillover/sage.hpp"
#include "spillover/time_util.hpp"

namespace spillover {

// Planted ground truth for every statistical claim downstream. The seed
// fully determines all outputs.
struct SynthSpec {
    std::uint64_t seed = 1;

    // cohort
    std::size_t n_treatment = 40;
    std::size_t n_control = 40;  // ignored when twins are planted (one twin per treatment)
    bool plant_twins = true;
    std::size_t decoys_per_treatment = 4;
    int horizon_days = 120;  // observations span [-horizon, +horizon]

    // planted ITS model, design column order:
    // const, time, expos, inter, time*expos, time*inter, expos*inter, t*e*i
    std::array<double, 8> beta = {0.002, 0.0, 0.001, 0.0002, 0.0, 0.0, 0.0007, 0.0};

    std::size_t tokens_per_day = 1000;
    enum class Noise { exact, bernoulli } noise = Noise::exact;

    // vocabulary: base words w000.., planted hate words h00..
    std::size_t vocab_size = 200;
    std::size_t hate_words = 10;
    double boost = 10.0;          // target-corpus probability boost of hate words
    double inside_rate = 0.05;    // hate fraction of in-target posts (post-join)

    // CV series generation
    int trend_break_day = 0;      // 0 = no break
    double pre_slope = 0.0;       // slope before the break (per day)
    double post_slope = 0.0;      // slope after the break, up to day -1
    double noise_frac = 0.0;      // sigma as a fraction of the local level

    // anchor so synthetic timestamps land mid-2017
    std::int64_t base_day0 = 17350;

    double rate(bool exposed, std::int64_t t) const {
        double e = exposed ? 1.0 : 0.0;
        double i = t >= 0 ? 1.0 : 0.0;
        double td = static_cast<double>(t);
        return beta[0] + beta[1] * td + beta[2] * e + beta[3] * i + beta[4] * td * e +
               beta[5] * td * i + beta[6] * e * i + beta[7] * td * e * i;
    }

    void validate_rates() const {
        for (int g = 0; g < 2; ++g)
            for (std::int64_t t = -horizon_days; t <= horizon_days; ++t) {
                double r = rate(g == 1, t);
                if (r < 0.0 || r > 1.0)
                    throw std::runtime_error("planted model leaves [0,1] at day " +
                                             std::to_string(t) + " (group " +
                                             (g ? "treatment" : "control") + "): rate " +
                                             std::to_string(r));
            }
    }
};

namespace synth_detail {

inline std::string base_word(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%04zu", i);
    return buf;
}

inline std::string hate_word(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "h%03zu", i);
    return buf;
}

inline std::size_t hate_count(const SynthSpec& spec, double rate, std::mt19937_64& rng) {
    double n = static_cast<double>(spec.tokens_per_day);
    if (spec.noise == SynthSpec::Noise::exact)
        return static_cast<std::size_t>(std::llround(rate * n));
    std::binomial_distribution<std::size_t> bin(spec.tokens_per_day, rate);
    return bin(rng);
}

// Token stream with exactly `hate` lexicon tokens out of `total`.
inline std::string make_body(const SynthSpec& spec, std::size_t total, std::size_t hate,
                             std::mt19937_64& rng) {
    std::ostringstream body;
    std::uniform_int_distribution<std::size_t> pick_base(0, spec.vocab_size - 1);
    for (std::size_t i = 0; i < total; ++i) {
        if (i > 0) body << ' ';
        if (i < hate)
            body << hate_word(i % spec.hate_words);
        else
            body << base_word(pick_base(rng));
    }
    return body.str();
}

}  // namespace synth_detail

// Direct forward-model observations, bypassing text generation; shares the
// rate computation with the dump generator. In exact mode the emitted
// ratio is round(rate * N) / N.
inline std::vector<Observation> generate_observations(const SynthSpec& spec) {
    spec.validate_rates();
    std::mt19937_64 rng(spec.seed);
    std::vector<Observation> obs;
    double n = static_cast<double>(spec.tokens_per_day);
    obs.reserve((spec.n_treatment + spec.n_control) * (2 * spec.horizon_days + 1));
    for (std::size_t g = 0; g < 2; ++g) {
        std::size_t users = g == 1 ? spec.n_treatment : spec.n_control;
        for (std::size_t u = 0; u < users; ++u)
            for (std::int64_t t = -spec.horizon_days; t <= spec.horizon_days; ++t) {
                double y = static_cast<double>(
                               synth_detail::hate_count(spec, spec.rate(g == 1, t), rng)) /
                           n;
                obs.push_back({t, g == 1, y, n});
            }
    }
    return obs;
}

// Pre-treatment daily mean series with an optional slope break, for
// bandwidth cross-validation tests. Covers days [-span, -1].
inline std::map<std::int64_t, double> generate_cv_series(const SynthSpec& spec,
                                                         std::int64_t span) {
    std::mt19937_64 rng(spec.seed ^ 0xc3a5c85c97cb3127ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::map<std::int64_t, double> series;
    // piecewise linear in d with the value anchored at day -1; the recent
    // segment [break, -1] has post_slope, everything earlier pre_slope
    const double level0 = 1.0;
    const std::int64_t brk = spec.trend_break_day;  // negative day, 0 = no break
    for (std::int64_t d = -span; d <= -1; ++d) {
        double level;
        if (brk == 0 || d >= brk)
            level = level0 + spec.post_slope * static_cast<double>(d + 1);
        else
            level = level0 + spec.post_slope * static_cast<double>(brk + 1) +
                    spec.pre_slope * static_cast<double>(d - brk);
        series[d] = level + spec.noise_frac * std::abs(level) * gauss(rng);
    }
    return series;
}

struct SynthNames {
    std::string target = "target_sub";
    std::vector<std::string> control_subs = {"ctrl_a", "ctrl_b", "ctrl_c"};
    std::string banned_sub = "banned_x";
    std::string background_sub = "misc";
};

struct SynthOutput {
    std::filesystem::path cohort_dump;
    std::filesystem::path background_dump;
    std::filesystem::path manifest;
    std::filesystem::path ratings;
    std::filesystem::path banned_list;
};

namespace synth_detail {

struct PostOut {
    std::string id, author, subreddit, body;
    std::int64_t created_utc, score;
    std::string kind;
};

inline void emit(std::ostringstream& out, const PostOut& p) {
    nlohmann::json j{{"id", p.id},         {"author", p.author},
                     {"subreddit", p.subreddit}, {"created_utc", p.created_utc},
                     {"body", p.body},     {"score", p.score},
                     {"kind", p.kind}};
    out << j.dump() << '\n';
}

}  // namespace synth_detail

// Writes the full synthetic world: a cohort post dump whose user-day token
// streams follow the planted ITS model, a background corpus for lexicon
// induction, the ratings table covering the entire vocabulary, a
// banned-subreddit list, and a ground-truth manifest.
inline SynthOutput generate_cohort(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                   const SynthNames& names = {}) {
    namespace sd = synth_detail;
    spec.validate_rates();
    std::filesystem::create_directories(out_dir);
    std::mt19937_64 rng(spec.seed);

    std::ostringstream dump;
    nlohmann::json manifest;
    manifest["seed"] = spec.seed;
    manifest["beta"] = spec.beta;
    manifest["tokens_per_day"] = spec.tokens_per_day;
    manifest["noise"] = spec.noise == SynthSpec::Noise::exact ? "exact" : "bernoulli";
    manifest["horizon_days"] = spec.horizon_days;
    manifest["target"] = names.target;
    manifest["inside_rate"] = spec.inside_rate;
    nlohmann::json users = nlohmann::json::object();
    nlohmann::json twins = nlohmann::json::object();
    nlohmann::json planted_ratios = nlohmann::json::object();

    std::size_t post_seq = 0;
    auto next_id = [&](const std::string& user) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s-%08zu", user.c_str(), post_seq++);
        return std::string(buf);
    };
    auto outside_sub = [&](std::int64_t t) -> const std::string& {
        std::size_t n = names.control_subs.size() + 1;
        std::size_t slot = static_cast<std::size_t>(((t % static_cast<std::int64_t>(n)) +
                                                     static_cast<std::int64_t>(n)) %
                                                    static_cast<std::int64_t>(n));
        return slot < names.control_subs.size() ? names.control_subs[slot] : names.banned_sub;
    };

    for (std::size_t u = 0; u < spec.n_treatment; ++u) {
        char tb[16], cb[16];
        std::snprintf(tb, sizeof(tb), "treat%04zu", u);
        std::snprintf(cb, sizeof(cb), "twin%04zu", u);
        std::string treat = tb, twin = cb;
        std::int64_t day0 = spec.base_day0 + static_cast<std::int64_t>(u % 3);
        // unique per user so no two twins share a feature vector
        std::int64_t score = 1 + static_cast<std::int64_t>(u);
        users[treat] = day0;
        if (spec.plant_twins) twins[treat] = twin;
        nlohmann::json ratio_list = nlohmann::json::array();

        for (std::int64_t t = -spec.horizon_days; t <= spec.horizon_days; ++t) {
            std::int64_t day = day0 + t;
            std::int64_t ts = day * kSecondsPerDay + 43200;
            const std::string& sub = outside_sub(t);
            std::size_t hc = sd::hate_count(spec, spec.rate(true, t), rng);
            ratio_list.push_back(static_cast<double>(hc) /
                                 static_cast<double>(spec.tokens_per_day));
            sd::emit(dump, {next_id(treat), treat, sub,
                            sd::make_body(spec, spec.tokens_per_day, hc, rng), ts, score,
                            t % 5 == 0 ? "submission" : "comment"});
            if (spec.plant_twins) {
                // same schedule, subreddit, and score: identical pre-activation
                // features; token stream follows the control model instead
                std::size_t chc = sd::hate_count(spec, spec.rate(false, t), rng);
                sd::emit(dump, {next_id(twin), twin, sub,
                                sd::make_body(spec, spec.tokens_per_day, chc, rng), ts, score,
                                t % 5 == 0 ? "submission" : "comment"});
            }
            // in-target posts from day 0 on; the t = 0 post anchors day 0
            if (t >= 0 && t % 7 == 0) {
                std::size_t n_in = spec.tokens_per_day / 2 + 1;
                std::size_t in_h =
                    static_cast<std::size_t>(std::llround(spec.inside_rate * n_in));
                sd::emit(dump, {next_id(treat), treat, names.target,
                                sd::make_body(spec, n_in, in_h, rng), ts + 600, score,
                                "comment"});
            }
        }
        planted_ratios[treat] = std::move(ratio_list);

        // decoys share the schedule but are perturbed away in feature space
        for (std::size_t d = 0; d < spec.decoys_per_treatment; ++d) {
            char db[24];
            std::snprintf(db, sizeof(db), "decoy%04zu_%zu", u, d);
            std::string decoy = db;
            for (std::int64_t t = -spec.horizon_days; t <= spec.horizon_days; t += 5) {
                std::int64_t ts = (day0 + t) * kSecondsPerDay + 43200;
                std::size_t hc = sd::hate_count(spec, spec.rate(false, t), rng);
                std::size_t nt = std::max<std::size_t>(spec.tokens_per_day / 5, 1);
                sd::emit(dump, {next_id(decoy), decoy, outside_sub(t),
                                sd::make_body(spec, nt, std::min(hc, nt), rng), ts,
                                score + 3 + static_cast<std::int64_t>(d), "comment"});
            }
        }
    }

    SynthOutput out;
    out.cohort_dump = out_dir / "cohort.ndjson";
    atomic_write(out.cohort_dump, dump.str());

    // background corpus: base unigram distribution, no boost
    std::ostringstream bg;
    {
        std::mt19937_64 bg_rng(spec.seed ^ 0x2545f4914f6cdd1dULL);
        std::size_t bg_posts = 400;
        for (std::size_t i = 0; i < bg_posts; ++i) {
            char ub[16];
            std::snprintf(ub, sizeof(ub), "bg%05zu", i % 97);
            std::int64_t ts = (spec.base_day0 - 400 + static_cast<std::int64_t>(i % 800)) *
                                  kSecondsPerDay +
                              7200;
            sd::emit(bg, {next_id(ub), ub, names.background_sub,
                          sd::make_body(spec, 250, 0, bg_rng), ts, 1, "comment"});
        }
    }
    out.background_dump = out_dir / "background.ndjson";
    atomic_write(out.background_dump, bg.str());

    // ratings for the whole vocabulary so any candidate set is covered
    std::ostringstream ratings;
    for (std::size_t i = 0; i < spec.hate_words; ++i)
        ratings << sd::hate_word(i) << "\t2\t2\t2\n";
    for (std::size_t i = 0; i < spec.vocab_size; ++i)
        ratings << sd::base_word(i) << "\t0\t0\t0\n";
    out.ratings = out_dir / "ratings.tsv";
    atomic_write(out.ratings, ratings.str());

    out.banned_list = out_dir / "banned.txt";
    atomic_write(out.banned_list, names.banned_sub + "\n");

    manifest["users"] = std::move(users);
    manifest["twins"] = std::move(twins);
    manifest["planted_ratios"] = std::move(planted_ratios);
    {
        nlohmann::json hw = nlohmann::json::array();
        for (std::size_t i = 0; i < spec.hate_words; ++i) hw.push_back(sd::hate_word(i));
        manifest["hate_words"] = std::move(hw);
    }
    out.manifest = out_dir / "manifest.json";
    atomic_write(out.manifest, manifest.dump(2) + "\n");
    return out;
}

// Token count tables for SAGE tests: background from a fixed base unigram
// distribution, target from the same base with planted hate words boosted
// and renormalized.
inline std::pair<VocabCounts, VocabCounts> generate_corpora(const SynthSpec& spec,
                                                            std::size_t target_tokens,
                                                            std::size_t background_tokens) {
    namespace sd = synth_detail;
    if (spec.boost <= 0) throw std::invalid_argument("generate_corpora: boost must be > 0");
    std::mt19937_64 rng(spec.seed ^ 0x853c49e6748fea9bULL);
    const std::size_t V = spec.vocab_size + spec.hate_words;
    // mildly Zipf-like base weights over the full vocabulary
    std::vector<double> base(V);
    for (std::size_t i = 0; i < V; ++i) base[i] = 1.0 / std::sqrt(static_cast<double>(i + 1));
    std::vector<double> boosted = base;
    for (std::size_t i = 0; i < spec.hate_words; ++i)
        boosted[spec.vocab_size + i] *= spec.boost;

    auto word = [&](std::size_t i) {
        return i < spec.vocab_size ? sd::base_word(i) : sd::hate_word(i - spec.vocab_size);
    };
    auto draw = [&](const std::vector<double>& weights, std::size_t n) {
        std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
        VocabCounts vc;
        for (std::size_t i = 0; i < n; ++i) vc.add(word(dist(rng)));
        return vc;
    };
    VocabCounts target = draw(boosted, target_tokens);
    VocabCounts background = draw(base, background_tokens);
    return {std::move(target), std::move(background)};
}

}  // namespace spillover
