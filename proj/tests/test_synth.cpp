#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "spillover/lexicon.hpp"
#include "spillover/synth.hpp"

using namespace spillover;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("spillover_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("generated world is byte-identical across runs with one seed") {
    SynthSpec spec;
    spec.seed = 42;
    spec.n_treatment = 5;
    spec.horizon_days = 30;
    spec.tokens_per_day = 50;
    spec.noise = SynthSpec::Noise::bernoulli;
    auto d1 = temp_dir("det1"), d2 = temp_dir("det2"), d3 = temp_dir("det3");
    auto o1 = generate_cohort(spec, d1);
    auto o2 = generate_cohort(spec, d2);
    CHECK(read_file(o1.cohort_dump) == read_file(o2.cohort_dump));
    CHECK(read_file(o1.background_dump) == read_file(o2.background_dump));
    CHECK(read_file(o1.manifest) == read_file(o2.manifest));
    CHECK(read_file(o1.ratings) == read_file(o2.ratings));

    spec.seed = 43;
    auto o3 = generate_cohort(spec, d3);
    CHECK(read_file(o1.cohort_dump) != read_file(o3.cohort_dump));
}

TEST_CASE("exact noise emits round(rate * N) / N") {
    SynthSpec spec;
    spec.beta = {0.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.005, 0.0};
    spec.n_treatment = 2;
    spec.n_control = 2;
    spec.horizon_days = 10;
    spec.tokens_per_day = 200;
    auto obs = generate_observations(spec);
    CHECK(obs.size() == 4 * 21);
    for (const Observation& o : obs) {
        double expect = o.exposed && o.t >= 0 ? 0.015 : 0.01;
        CHECK(o.y == std::llround(expect * 200) / 200.0);
        CHECK(o.weight == 200.0);
    }
}

TEST_CASE("zero-effect model yields a flat constant series") {
    SynthSpec spec;
    spec.beta = {0.004, 0, 0, 0, 0, 0, 0, 0};
    spec.tokens_per_day = 1000;
    spec.n_treatment = 3;
    spec.n_control = 3;
    spec.horizon_days = 20;
    for (const Observation& o : generate_observations(spec)) CHECK(o.y == 0.004);
}

TEST_CASE("models leaving [0,1] are rejected") {
    SynthSpec spec;
    spec.beta[1] = -1.0;  // strong negative trend goes below zero
    CHECK_THROWS_WITH_AS(generate_observations(spec), doctest::Contains("rate"),
                         std::runtime_error);
    SynthSpec big;
    big.beta[0] = 0.9;
    big.beta[6] = 0.5;  // exceeds 1 post-join
    CHECK_THROWS(generate_observations(big));
    CHECK_THROWS(generate_cohort(big, temp_dir("reject")));
}

TEST_CASE("corpus generator concentrates planted words near their expected share") {
    SynthSpec spec;
    spec.seed = 9;
    spec.vocab_size = 200;
    spec.hate_words = 10;
    spec.boost = 10.0;
    const std::size_t n = 100000;
    auto [target, background] = generate_corpora(spec, n, n);

    // oracle: the generator's own weight law, recomputed independently
    double base_sum = 0, hate_base = 0;
    for (std::size_t i = 0; i < spec.vocab_size + spec.hate_words; ++i) {
        double w = 1.0 / std::sqrt(static_cast<double>(i + 1));
        base_sum += w;
        if (i >= spec.vocab_size) hate_base += w;
    }
    double boosted_sum = base_sum + (spec.boost - 1.0) * hate_base;
    double expect_target = spec.boost * hate_base / boosted_sum;
    double expect_background = hate_base / base_sum;

    auto hate_fraction = [&](const VocabCounts& vc) {
        double hits = 0, total = 0;
        for (const auto& [w, c] : vc.counts) {
            total += c;
            if (w.starts_with('h')) hits += c;
        }
        CHECK(total == static_cast<double>(n));
        return hits / total;
    };
    CHECK(hate_fraction(target) == doctest::Approx(expect_target).epsilon(0.03));
    CHECK(hate_fraction(background) == doctest::Approx(expect_background).epsilon(0.05));
    CHECK(hate_fraction(target) > 3.0 * hate_fraction(background));
}

TEST_CASE("cv series is exactly piecewise linear without noise") {
    SynthSpec spec;
    spec.trend_break_day = -40;
    spec.pre_slope = 0.0;
    spec.post_slope = 0.01;
    auto series = generate_cv_series(spec, 100);
    REQUIRE(series.size() == 100);
    CHECK(series.at(-1) == doctest::Approx(1.0));
    CHECK(series.at(-40) == doctest::Approx(1.0 + 0.01 * -39));
    // flat before the break
    CHECK(series.at(-41) == doctest::Approx(series.at(-100)));
    // constant slope after the break
    for (std::int64_t d = -39; d <= -1; ++d)
        CHECK(series.at(d) - series.at(d - 1) == doctest::Approx(0.01));

    SUBCASE("noise is seed-deterministic") {
        spec.noise_frac = 0.05;
        auto a = generate_cv_series(spec, 100);
        auto b = generate_cv_series(spec, 100);
        CHECK(a == b);
        spec.seed += 1;
        CHECK(generate_cv_series(spec, 100) != a);
    }
}

TEST_CASE("dumps survive the text pipeline with the planted ratios intact") {
    SynthSpec spec;
    spec.seed = 21;
    spec.n_treatment = 4;
    spec.horizon_days = 25;
    spec.tokens_per_day = 100;
    auto dir = temp_dir("pipeline");
    auto out = generate_cohort(spec, dir);

    CorpusStore store;
    auto h = store.ingest({out.cohort_dump, out.background_dump});
    CHECK(h.error_count == 0);

    auto manifest = nlohmann::json::parse(read_file(out.manifest));
    HateLexicon lex;
    lex.community = manifest["target"];
    for (const auto& w : manifest["hate_words"]) lex.words[w.get<std::string>()] = {1.0, 6};
    ScopeFilter filter{manifest["target"], nullptr};

    for (const auto& [user, day0_json] : manifest["users"].items()) {
        std::int64_t day0 = day0_json.get<std::int64_t>();
        auto planted = manifest["planted_ratios"][user];
        auto series = daily_series(store, user, lex, Scope::outside_target, filter, day0);
        REQUIRE(series.size() == planted.size());
        for (std::size_t i = 0; i < series.size(); ++i) {
            std::int64_t t = series[i].rel_day;
            CHECK(t == -spec.horizon_days + static_cast<std::int64_t>(i));
            CHECK(series[i].ratio ==
                  planted[static_cast<std::size_t>(t + spec.horizon_days)].get<double>());
        }
        // in-target posts carry the planted inside rate
        auto inside = daily_series(store, user, lex, Scope::inside_target, filter, day0);
        CHECK(!inside.empty());
        for (const DailyPoint& p : inside) {
            CHECK(p.rel_day >= 0);
            CHECK(p.ratio == doctest::Approx(spec.inside_rate).epsilon(0.2));
        }
    }
}
