#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spillover/analysis.hpp"
#include "spillover/bot_filter.hpp"
#include "spillover/cohort.hpp"
#include "spillover/config.hpp"
#include "spillover/corpus.hpp"
#include "spillover/its.hpp"
#include "spillover/lexicon.hpp"
#include "spillover/sage.hpp"
#include "spillover/synth.hpp"
#include "spillover/tokenize.hpp"

namespace spillover {

// Batch pipeline over a fixed artifact layout under the output directory:
//
//   synth/         generated dumps, ratings, banned list, manifest
//   store/         normalized cohort corpus
//   bg_store/      normalized background corpus
//   lexicon/       candidates.tsv, lexicon.tsv
//   cohort/        members.txt, control_subreddits.csv, pool.txt
//   match/         pairs.csv
//   its/           cv.csv, fit.json, plot_data.csv
//   sensitivity/   sweep.csv
//   analysis/      context_series.csv, lifespan.csv, word_freq_*.csv, spearman.json
//
// Every stage writes atomically and is deterministic for a fixed config
// and seed, so rerunning any stage reproduces its artifacts byte for byte.
class Pipeline {
public:
    explicit Pipeline(RunConfig cfg) : cfg_(cfg), given_(std::move(cfg)) {}

    const RunConfig& config() const { return cfg_; }

    std::filesystem::path dir(const std::string& stage) const { return cfg_.out_dir / stage; }

    // Records the configuration as given, before any slots were pointed at
    // synth artifacts, so the snapshot is identical across output locations.
    void write_snapshot() const {
        RunConfig snap = given_;
        snap.out_dir.clear();
        atomic_write(cfg_.out_dir / "resolved_config.txt", snap.snapshot());
    }

    // ---- synth ----------------------------------------------------------
    SynthOutput run_synth() {
        SynthSpec spec;
        spec.seed = cfg_.synth_seed;
        spec.n_treatment = cfg_.synth_treatment;
        spec.decoys_per_treatment = cfg_.synth_decoys;
        spec.horizon_days = cfg_.synth_horizon;
        spec.tokens_per_day = cfg_.synth_tokens_per_day;
        spec.noise = cfg_.synth_noise == "exact" ? SynthSpec::Noise::exact
                                                 : SynthSpec::Noise::bernoulli;
        for (std::size_t i = 0; i < 8; ++i) spec.beta[i] = cfg_.synth_beta[i];
        spec.vocab_size = cfg_.synth_vocab;
        spec.hate_words = cfg_.synth_hate_words;
        spec.boost = cfg_.synth_boost;
        return generate_cohort(spec, dir("synth"));
    }

    // Points the input slots at the synth stage's artifacts when the config
    // left them empty (the `synth` + `all` fixture flow).
    void adopt_synth_inputs() {
        namespace fs = std::filesystem;
        auto sdir = dir("synth");
        if (cfg_.dumps.empty() && fs::exists(sdir / "cohort.ndjson")) {
            cfg_.dumps = {sdir / "cohort.ndjson"};
            if (cfg_.target.empty()) cfg_.target = SynthNames{}.target;
        }
        if (cfg_.background.empty() && fs::exists(sdir / "background.ndjson"))
            cfg_.background = sdir / "background.ndjson";
        if (cfg_.ratings.empty() && fs::exists(sdir / "ratings.tsv"))
            cfg_.ratings = sdir / "ratings.tsv";
        if (cfg_.banned.empty() && fs::exists(sdir / "banned.txt"))
            cfg_.banned = sdir / "banned.txt";
    }

    // ---- ingest ---------------------------------------------------------
    void run_ingest() {
        if (cfg_.dumps.empty())
            throw std::runtime_error("ingest: no input dumps configured (run `synth` first or "
                                     "set input.dumps)");
        CorpusStore store;
        store.ingest(cfg_.dumps);
        store.save(dir("store"));
        if (!cfg_.background.empty()) {
            CorpusStore bg;
            bg.ingest({cfg_.background});
            bg.save(dir("bg_store"));
        }
    }

    CorpusStore load_store(const std::string& which = "store") const {
        auto d = dir(which);
        if (!std::filesystem::exists(d / "records.ndjson"))
            throw std::runtime_error(which + " missing; run the `ingest` stage first");
        return CorpusStore::load(d);
    }

    StopwordSet stopwords() const {
        if (cfg_.stopwords.empty()) return default_stopwords();
        StopwordSet set;
        for (const auto& w : read_word_list(cfg_.stopwords)) set.insert(w);
        return set;
    }

    // ---- lexicon --------------------------------------------------------
    void run_lexicon() {
        cfg_.require_target();
        CorpusStore store = load_store();
        CorpusStore bg = load_store("bg_store");
        StopwordSet stop = stopwords();

        VocabCounts target_counts, bg_counts;
        std::map<std::string, std::vector<std::string>> contexts;
        for (const PostRecord* p : store.posts_by_subreddit(cfg_.target)) {
            auto toks = tokenize(p->body, stop);
            for (const auto& t : toks) {
                target_counts.add(t);
                auto& ctx = contexts[t];
                if (ctx.size() < 3) ctx.push_back(p->id);
            }
        }
        for (std::size_t i = 0; i < bg.size(); ++i)
            for (const auto& t : tokenize(bg.record(i).body, stop)) bg_counts.add(t);

        SageModel model = fit_sage(target_counts, bg_counts, cfg_.lambda);
        auto candidates = select_candidates(model, cfg_.top_k);

        std::ostringstream cand;
        for (const auto& c : candidates) {
            cand << c.word << '\t' << fmt_g(c.eta);
            auto it = contexts.find(c.word);
            std::size_t n = it == contexts.end() ? 0 : it->second.size();
            for (std::size_t i = 0; i < 3; ++i)
                cand << '\t' << (i < n ? it->second[i] : "");
            cand << '\n';
        }
        atomic_write(dir("lexicon") / "candidates.tsv", cand.str());

        if (cfg_.ratings.empty())
            throw std::runtime_error("lexicon: input.ratings not set");
        HateLexicon lex = apply_ratings(candidates, load_ratings(cfg_.ratings), cfg_.target);
        save_lexicon(lex, dir("lexicon") / "lexicon.tsv");
    }

    HateLexicon load_lex() const {
        auto p = dir("lexicon") / "lexicon.tsv";
        if (!std::filesystem::exists(p))
            throw std::runtime_error("lexicon missing; run the `lexicon` stage first");
        return load_lexicon(p, cfg_.target);
    }

    // ---- cohort ---------------------------------------------------------
    void run_cohort() {
        cfg_.require_target();
        CorpusStore store = load_store();
        auto members = extract_members(store, cfg_.target);

        std::optional<std::set<std::string>> confirmed;
        if (!cfg_.confirmed_bots.empty()) {
            confirmed.emplace();
            for (const auto& n : read_word_list(cfg_.confirmed_bots)) confirmed->insert(n);
        }
        BotFilterReport bots = filter_bots(members, default_bot_keywords(),
                                           confirmed ? &*confirmed : nullptr);
        for (const std::string& b : bots.removed) members.erase(b);

        auto ranking = rank_control_subreddits(store, members, cfg_.target,
                                               std::max(cfg_.control_subreddits,
                                                        cfg_.feature_subreddits));
        std::ostringstream rank_csv;
        rank_csv << "subreddit,treatment_ratio,author_count\n";
        for (const auto& s : ranking)
            rank_csv << s.name << ',' << fmt_g(s.treatment_ratio) << ',' << s.author_count
                     << '\n';
        atomic_write(dir("cohort") / "control_subreddits.csv", rank_csv.str());

        std::vector<std::string> treatments(members.begin(), members.end());
        if (treatments.size() > cfg_.treatment_cap)
            treatments = seeded_sample({members.begin(), members.end()}, cfg_.treatment_cap,
                                       cfg_.seed);
        std::sort(treatments.begin(), treatments.end());
        std::ostringstream mem;
        for (const auto& m : treatments) mem << m << '\n';
        atomic_write(dir("cohort") / "members.txt", mem.str());

        std::vector<SubredditScore> control_subs(
            ranking.begin(),
            ranking.begin() + std::min(ranking.size(), cfg_.control_subreddits));
        auto pool = build_control_pool(store, control_subs, members, bots.removed,
                                       treatments.size(), cfg_.seed, cfg_.cap_ratio);
        std::ostringstream pool_txt;
        for (const auto& p : pool) pool_txt << p << '\n';
        atomic_write(dir("cohort") / "pool.txt", pool_txt.str());

        std::ostringstream botrep;
        botrep << "flagged,keywords,removed\n";
        for (const auto& [name, kws] : bots.flagged) {
            botrep << name << ',';
            for (std::size_t i = 0; i < kws.size(); ++i) botrep << (i ? ";" : "") << kws[i];
            botrep << ',' << (bots.is_removed(name) ? "yes" : "no") << '\n';
        }
        atomic_write(dir("cohort") / "bot_report.csv", botrep.str());
    }

    std::vector<std::string> feature_subreddit_list() const {
        auto p = dir("cohort") / "control_subreddits.csv";
        if (!std::filesystem::exists(p))
            throw std::runtime_error("cohort artifacts missing; run the `cohort` stage first");
        std::vector<std::string> subs;
        bool header = true;
        for_each_line(p, [&](std::string_view line) {
            if (header) {
                header = false;
                return;
            }
            auto comma = line.find(',');
            if (comma != std::string_view::npos)
                subs.emplace_back(line.substr(0, comma));
        });
        if (subs.size() > cfg_.feature_subreddits) subs.resize(cfg_.feature_subreddits);
        return subs;
    }

    // ---- match ----------------------------------------------------------
    void run_match() {
        CorpusStore store = load_store();
        auto treatments = read_word_list(dir("cohort") / "members.txt");
        auto pool = read_word_list(dir("cohort") / "pool.txt");
        auto features = feature_subreddit_list();
        auto pairs = match_pairs(store, treatments, pool, cfg_.target, features, cfg_.seed);
        std::ostringstream csv;
        csv << "treatment,control,distance,day0\n";
        for (const auto& p : pairs)
            csv << p.treatment << ',' << p.control << ',' << fmt_g(p.distance) << ','
                << iso_date(p.day0) << '\n';
        atomic_write(dir("match") / "pairs.csv", csv.str());
    }

    std::vector<MatchedPair> load_pairs() const {
        auto path = dir("match") / "pairs.csv";
        if (!std::filesystem::exists(path))
            throw std::runtime_error("pairs missing; run the `match` stage first");
        std::vector<MatchedPair> pairs;
        bool header = true;
        for_each_line(path, [&](std::string_view line) {
            if (header) {
                header = false;
                return;
            }
            auto fields = detail::split(std::string(line), ',');
            if (fields.size() != 4) throw std::runtime_error("malformed pairs.csv row");
            MatchedPair p;
            p.treatment = fields[0];
            p.control = fields[1];
            p.distance = std::stod(fields[2]);
            int y, m, d;
            if (std::sscanf(fields[3].c_str(), "%d-%d-%d", &y, &m, &d) != 3)
                throw std::runtime_error("malformed day0 in pairs.csv: " + fields[3]);
            p.day0 = first_day_of_month({y, m}) + (d - 1);
            pairs.push_back(std::move(p));
        });
        return pairs;
    }

    // Regression observations: treatment users scoped outside the target
    // subreddit, controls over all their posts.
    std::vector<Observation> build_observations() const {
        CorpusStore store = load_store();
        HateLexicon lex = load_lex();
        auto pairs = load_pairs();
        StopwordSet stop = stopwords();
        ScopeFilter filter{cfg_.target, nullptr};
        std::vector<Observation> obs;
        for (const auto& pair : pairs) {
            for (const DailyPoint& p :
                 daily_series(store, pair.treatment, lex, Scope::outside_target, filter,
                              pair.day0, stop))
                obs.push_back({p.rel_day, true, p.ratio, static_cast<double>(p.token_count)});
            for (const DailyPoint& p : daily_series(store, pair.control, lex, Scope::all,
                                                    filter, pair.day0, stop))
                obs.push_back({p.rel_day, false, p.ratio, static_cast<double>(p.token_count)});
        }
        if (cfg_.granularity == "group-day") obs = to_group_day(obs);
        return obs;
    }

    // ---- its ------------------------------------------------------------
    void run_its() {
        auto obs = build_observations();
        auto series = group_mean_series(obs, true);
        std::map<std::int64_t, double> pre;
        for (const auto& [t, v] : series)
            if (t < 0) pre[t] = v;

        BandwidthSearch search = cv_bandwidth(pre, cfg_.bandwidth_grid(), cfg_.cv_rounds);
        std::ostringstream cv_csv;
        cv_csv << "bandwidth,rmse,selected\n";
        for (std::size_t i = 0; i < search.candidates.size(); ++i)
            cv_csv << search.candidates[i] << ',' << fmt_g(search.rmse[i]) << ','
                   << (search.candidates[i] == search.selected ? "yes" : "no") << '\n';
        atomic_write(dir("its") / "cv.csv", cv_csv.str());

        ItsFit fit = fit_its(obs, search.selected, cfg_.token_weighted);
        atomic_write(dir("its") / "fit.json", fit_report(fit) + "\n");
        atomic_write(dir("its") / "plot_data.csv", plot_data(fit, obs));
    }

    std::string fit_report(const ItsFit& fit) const {
        nlohmann::json j;
        const auto& names = its_term_names();
        for (std::size_t i = 0; i < 8; ++i) {
            j["coefficients"][names[i]] = fit.ols.beta[static_cast<Eigen::Index>(i)];
            j["std_errors"][names[i]] = fit.ols.std_err[static_cast<Eigen::Index>(i)];
            j["t_stats"][names[i]] = fit.ols.t_stat[static_cast<Eigen::Index>(i)];
            j["p_values"][names[i]] = fit.ols.p_value[static_cast<Eigen::Index>(i)];
        }
        j["f_stat"] = fit.ols.f_stat;
        j["f_pvalue"] = fit.ols.f_pvalue;
        j["n"] = fit.ols.n;
        j["bandwidth"] = fit.bandwidth;
        j["relative_increase_pct"] = relative_increase(fit);
        return j.dump(2);
    }

    // Per-group per-period best-fit line endpoints plus daily group means;
    // enough to redraw the four-segment ITS figure externally.
    std::string plot_data(const ItsFit& fit, const std::vector<Observation>& obs) const {
        std::ostringstream csv;
        csv << "kind,group,period,day,value\n";
        double B = static_cast<double>(fit.bandwidth);
        struct Seg {
            const char *group, *period;
            bool e, i;
            double t0, t1;
        };
        for (const Seg& s : {Seg{"control", "pre", false, false, -B, -1.0},
                             Seg{"control", "post", false, true, 0.0, B},
                             Seg{"treatment", "pre", true, false, -B, -1.0},
                             Seg{"treatment", "post", true, true, 0.0, B}}) {
            csv << "fit," << s.group << ',' << s.period << ',' << fmt_g(s.t0) << ','
                << fmt_g(fit.predict(s.e, s.i, s.t0)) << '\n';
            csv << "fit," << s.group << ',' << s.period << ',' << fmt_g(s.t1) << ','
                << fmt_g(fit.predict(s.e, s.i, s.t1)) << '\n';
        }
        for (bool exposed : {false, true}) {
            auto series = group_mean_series(obs, exposed);
            for (const auto& [t, v] : series) {
                if (std::abs(t) > fit.bandwidth) continue;
                csv << "daily_mean," << (exposed ? "treatment" : "control") << ','
                    << (t < 0 ? "pre" : "post") << ',' << t << ',' << fmt_g(v) << '\n';
            }
        }
        return csv.str();
    }

    // ---- sensitivity ----------------------------------------------------
    void run_sensitivity() {
        auto obs = build_observations();
        auto rows = sensitivity_sweep(obs, cfg_.bandwidth_grid(), cfg_.token_weighted,
                                      cfg_.threads);
        std::ostringstream csv;
        csv << "bandwidth,coefficient,value,ci_low,ci_high,p\n";
        const auto& names = its_term_names();
        for (const auto& row : rows) {
            if (!row.ok) {
                csv << row.bandwidth << ",ERROR," << row.error << ",,,\n";
                continue;
            }
            for (std::size_t i = 0; i < 8; ++i) {
                double b = row.fit.ols.beta[static_cast<Eigen::Index>(i)];
                double hw = row.fit.ols.ci_halfwidth(i);
                csv << row.bandwidth << ',' << names[i] << ',' << fmt_g(b) << ','
                    << fmt_g(b - hw) << ',' << fmt_g(b + hw) << ','
                    << fmt_g(row.fit.ols.p_value[static_cast<Eigen::Index>(i)]) << '\n';
            }
        }
        atomic_write(dir("sensitivity") / "sweep.csv", csv.str());
    }

    // ---- analyze --------------------------------------------------------
    void run_analyze() {
        CorpusStore store = load_store();
        HateLexicon lex = load_lex();
        auto pairs = load_pairs();
        StopwordSet stop = stopwords();

        std::optional<std::set<std::string>> banned;
        if (!cfg_.banned.empty() && std::filesystem::exists(cfg_.banned)) {
            banned.emplace();
            for (const auto& n : read_word_list(cfg_.banned)) banned->insert(n);
        }

        std::vector<std::string> warnings;
        auto series = context_series(store, pairs, lex, cfg_.target,
                                     banned ? &*banned : nullptr, stop, &warnings);
        std::ostringstream csv;
        csv << "scope,day,mean,n\n";
        for (const auto& s : series)
            for (const auto& [day, mn] : s.daily)
                csv << s.label << ',' << day << ',' << fmt_g(mn.first) << ',' << mn.second
                    << '\n';
        atomic_write(dir("analysis") / "context_series.csv", csv.str());

        LifespanSplit split = lifespan_split(store, pairs, lex, cfg_.target, stop);
        std::ostringstream ls;
        ls << "group,users,mean_post_join_ratio\n";
        ls << "up_to_" << split.threshold_days << "_days," << split.short_lived_users << ','
           << (split.short_lived_mean ? fmt_g(*split.short_lived_mean) : "absent") << '\n';
        ls << "over_" << split.threshold_days << "_days," << split.long_lived_users << ','
           << (split.long_lived_mean ? fmt_g(*split.long_lived_mean) : "absent") << '\n';
        atomic_write(dir("analysis") / "lifespan.csv", ls.str());

        auto in_dist = word_distribution(store, pairs, lex, Scope::inside_target, cfg_.target,
                                         stop);
        auto out_dist = word_distribution(store, pairs, lex, Scope::outside_target, cfg_.target,
                                          stop);
        auto dist_csv = [&](const std::map<std::string, double>& d, const char* scope) {
            std::ostringstream o;
            o << "scope,word,freq\n";
            for (const auto& [w, f] : d) o << scope << ',' << w << ',' << fmt_g(f) << '\n';
            return o.str();
        };
        atomic_write(dir("analysis") / "word_freq_inside.csv", dist_csv(in_dist, "inside"));
        atomic_write(dir("analysis") / "word_freq_outside.csv", dist_csv(out_dist, "outside"));

        nlohmann::json sp;
        try {
            RankCorrelation rc = compare_distributions(in_dist, out_dist);
            sp["rho"] = rc.rho;
            sp["p_value"] = rc.p_value;
            sp["n"] = rc.n;
            sp["note"] =
                "A small p-value indicates significant monotonic association between the two "
                "frequency rankings; interpret distribution differences with care.";
        } catch (const std::exception& e) {
            sp["error"] = e.what();
        }
        for (const auto& w : warnings) sp["warnings"].push_back(w);
        atomic_write(dir("analysis") / "spearman.json", sp.dump(2) + "\n");
    }

    void run_all() {
        run_synth();
        adopt_synth_inputs();
        run_ingest();
        run_lexicon();
        run_cohort();
        run_match();
        run_its();
        run_sensitivity();
        run_analyze();
        write_snapshot();
    }

private:
    RunConfig cfg_;
    RunConfig given_;
};

}  // namespace spillover
