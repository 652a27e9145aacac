#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spillover/config.hpp"

using namespace spillover;

TEST_CASE("empty config keeps the documented defaults") {
    RunConfig cfg = parse_config("");
    CHECK(cfg.top_k == 300);
    CHECK(cfg.control_subreddits == 30);
    CHECK(cfg.feature_subreddits == 50);
    CHECK(cfg.cap_ratio == 5);
    CHECK(cfg.treatment_cap == 15000);
    CHECK(cfg.bandwidth_min == 30);
    CHECK(cfg.bandwidth_max == 365);
    CHECK(cfg.bandwidth_step == 5);
    CHECK(cfg.cv_rounds == 100);
    CHECK(cfg.granularity == "user-day");
    CHECK(cfg.lambda == -1.0);
    CHECK(!cfg.token_weighted);
    auto grid = cfg.bandwidth_grid();
    CHECK(grid.size() == 68);
    CHECK(grid.front() == 30);
    CHECK(grid.back() == 365);
}

TEST_CASE("sectioned keys override defaults") {
    RunConfig cfg = parse_config(
        "[input]\n"
        "dumps = a.ndjson ; b.ndjson.gz\n"
        "target = SomeSub\n"
        "# comment line\n"
        "[its]\n"
        "bandwidth_max = 80\n"
        "granularity = group-day\n"
        "token_weighted = true\n"
        "[synth]\n"
        "beta = 0.1, 0, 0, 0, 0, 0, 0.05, 0\n");
    REQUIRE(cfg.dumps.size() == 2);
    CHECK(cfg.dumps[1] == "b.ndjson.gz");
    CHECK(cfg.target == "SomeSub");
    CHECK(cfg.bandwidth_max == 80);
    CHECK(cfg.granularity == "group-day");
    CHECK(cfg.token_weighted);
    REQUIRE(cfg.synth_beta.size() == 8);
    CHECK(cfg.synth_beta[0] == 0.1);
    CHECK(cfg.synth_beta[6] == 0.05);
}

TEST_CASE("unknown keys are named in the error") {
    CHECK_THROWS_WITH_AS(parse_config("[its]\nbandwith_max = 80\n"),
                         doctest::Contains("its.bandwith_max"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_config("no equals sign here\n"),
                         doctest::Contains("line 1"), std::runtime_error);
}

TEST_CASE("value validation") {
    CHECK_THROWS_WITH_AS(parse_config("[its]\ngranularity = hourly\n"),
                         doctest::Contains("granularity"), std::runtime_error);
    CHECK_THROWS_WITH_AS(parse_config("[synth]\nnoise = gaussian\n"),
                         doctest::Contains("noise"), std::runtime_error);
    CHECK_THROWS(parse_config("[synth]\nbeta = 1, 2, 3\n"));
    CHECK_THROWS(parse_config("[its]\ntoken_weighted = maybe\n"));
}

TEST_CASE("require_target rejects a missing target subreddit") {
    RunConfig cfg = parse_config("[input]\ndumps = x.ndjson\n");
    CHECK_THROWS_WITH_AS(cfg.require_target(), doctest::Contains("input.target"),
                         std::runtime_error);
    cfg.target = "t";
    CHECK_NOTHROW(cfg.require_target());
}

TEST_CASE("snapshot round-trips through the parser") {
    RunConfig cfg = parse_config(
        "[input]\ntarget = T\ndumps = one.ndjson\n[its]\nbandwidth_max = 120\n"
        "[lexicon]\nlambda = 2.5\n");
    RunConfig again = parse_config(cfg.snapshot());
    CHECK(again.target == cfg.target);
    CHECK(again.dumps == cfg.dumps);
    CHECK(again.bandwidth_max == cfg.bandwidth_max);
    CHECK(again.lambda == cfg.lambda);
    CHECK(again.snapshot() == cfg.snapshot());
}
