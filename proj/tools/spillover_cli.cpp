// Batch pipeline driver: induce a community hate lexicon, build matched
// cohorts, and estimate the causal effect of joining a community on
// out-of-community hate speech via interrupted time series.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "spillover/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"community hate-speech spillover analysis pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string granularity;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
    bool threads_set = false;

    app.add_option("--config", config_path, "run configuration file");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    auto* seed_opt = app.add_option("--seed", seed, "seed (overrides cohort.seed and synth.seed)");
    auto* thr_opt = app.add_option("--threads", threads, "worker cap (0 = hardware default)");
    app.add_option("--granularity", granularity, "user-day or group-day")
        ->check(CLI::IsMember({"user-day", "group-day"}));

    const char* stages[] = {"ingest", "lexicon", "cohort", "match", "its",
                            "sensitivity", "analyze", "synth", "all"};
    for (const char* s : stages) app.add_subcommand(s);

    CLI11_PARSE(app, argc, argv);
    seed_set = seed_opt->count() > 0;
    threads_set = thr_opt->count() > 0;

    try {
        spillover::RunConfig cfg;
        if (!config_path.empty()) cfg = spillover::load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed_set) {
            cfg.seed = seed;
            cfg.synth_seed = seed;
        }
        if (threads_set) cfg.threads = threads;
        if (!granularity.empty()) cfg.granularity = granularity;

        spillover::Pipeline pipe(cfg);
        std::string stage = app.get_subcommands().front()->get_name();
        if (stage == "synth") {
            pipe.run_synth();
        } else if (stage == "ingest") {
            pipe.adopt_synth_inputs();
            pipe.run_ingest();
        } else if (stage == "lexicon") {
            pipe.adopt_synth_inputs();
            pipe.run_lexicon();
        } else if (stage == "cohort") {
            pipe.adopt_synth_inputs();
            pipe.run_cohort();
        } else if (stage == "match") {
            pipe.adopt_synth_inputs();
            pipe.run_match();
        } else if (stage == "its") {
            pipe.adopt_synth_inputs();
            pipe.run_its();
        } else if (stage == "sensitivity") {
            pipe.adopt_synth_inputs();
            pipe.run_sensitivity();
        } else if (stage == "analyze") {
            pipe.adopt_synth_inputs();
            pipe.run_analyze();
        } else if (stage == "all") {
            pipe.run_all();
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
