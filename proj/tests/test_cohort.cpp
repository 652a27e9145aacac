#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "spillover/cohort.hpp"
#include "spillover/synth.hpp"

using namespace spillover;
namespace fs = std::filesystem;

namespace {

struct CorpusBuilder {
    std::ofstream f;
    int seq = 0;
    explicit CorpusBuilder(const std::string& name) {
        dir = fs::temp_directory_path() / ("spillover_test_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        f.open(dir / "dump.ndjson");
    }
    fs::path dir;
    void post(const std::string& author, const std::string& sub, std::int64_t day,
              const std::string& body = "tok1 tok2", std::int64_t score = 1,
              const std::string& kind = "comment") {
        char id[16];
        std::snprintf(id, sizeof(id), "p%06d", seq++);
        nlohmann::json j{{"id", id}, {"author", author}, {"subreddit", sub},
                         {"created_utc", day * 86400 + 3600}, {"body", body},
                         {"score", score}, {"kind", kind}};
        f << j.dump() << "\n";
    }
    CorpusStore build() {
        f.close();
        CorpusStore store;
        store.ingest({dir / "dump.ndjson"});
        return store;
    }
};

}  // namespace

TEST_CASE("rank_control_subreddits orders by treatment ratio") {
    CorpusBuilder cb("rank");
    // target members: t1, t2
    cb.post("t1", "target", 100);
    cb.post("t2", "target", 100);
    // s1: 90% planted ratio is approximated with 9/10 treatment authors;
    // keep it simple with exact small sets
    cb.post("t1", "s1", 90);  // s1 authors: t1 only -> ratio 1.0
    cb.post("t1", "s2", 90);  // s2 authors: t1, u1 -> 0.5
    cb.post("u1", "s2", 90);
    cb.post("u1", "s3", 90);  // s3 authors: u1 ... ratio low
    cb.post("u2", "s3", 90);
    cb.post("u3", "s3", 90);
    cb.post("t2", "s3", 90);  // 1/4
    auto store = cb.build();
    auto ranking = rank_control_subreddits(store, {"t1", "t2"}, "target", 30);
    REQUIRE(ranking.size() == 3);
    CHECK(ranking[0].name == "s1");
    CHECK(ranking[0].treatment_ratio == doctest::Approx(1.0));
    CHECK(ranking[1].name == "s2");
    CHECK(ranking[2].name == "s3");
    CHECK(ranking[2].treatment_ratio == doctest::Approx(0.25));

    SUBCASE("target never appears; k truncates") {
        for (const auto& s : ranking) CHECK(s.name != "target");
        CHECK(rank_control_subreddits(store, {"t1", "t2"}, "target", 2).size() == 2);
    }
    SUBCASE("empty treatment set is an error") {
        CHECK_THROWS(rank_control_subreddits(store, {}, "target"));
    }
}

TEST_CASE("build_control_pool excludes treatment members and caps at ratio") {
    CorpusBuilder cb("pool");
    cb.post("t1", "target", 100);
    for (int i = 0; i < 40; ++i) cb.post("c" + std::to_string(i), "s1", 90);
    cb.post("t1", "s1", 90);  // treatment member active in control subreddit
    auto store = cb.build();
    std::vector<SubredditScore> subs = {{"s1", 0.1, 41}};

    auto pool = build_control_pool(store, subs, {"t1"}, {}, 5, 7, 5);
    CHECK(pool.size() == 25);  // 5:1 cap
    CHECK(std::find(pool.begin(), pool.end(), "t1") == pool.end());

    SUBCASE("deterministic for a fixed seed") {
        auto again = build_control_pool(store, subs, {"t1"}, {}, 5, 7, 5);
        CHECK(pool == again);
    }
    SUBCASE("pool smaller than treatment count is an error") {
        CHECK_THROWS(build_control_pool(store, subs, {"t1"}, {}, 100, 7, 5));
    }
    SUBCASE("removed bots are excluded") {
        auto nobots = build_control_pool(store, subs, {"t1"}, {"c3"}, 5, 7, 5);
        CHECK(std::find(nobots.begin(), nobots.end(), "c3") == nobots.end());
    }
}

TEST_CASE("features_at counts strictly before the activation month") {
    CorpusBuilder cb("features");
    std::int64_t may_day = first_day_of_month({2017, 5}) + 10;
    std::int64_t jun_day = first_day_of_month({2017, 6}) + 2;
    cb.post("u", "s1", may_day, "b", 3, "submission");
    cb.post("u", "s1", may_day + 1, "b", 2, "comment");
    cb.post("u", "s2", may_day + 2, "b", 4, "comment");
    cb.post("u", "s1", jun_day, "b", 100, "comment");  // inside activation month
    auto store = cb.build();

    auto f = features_at(store, "u", {2017, 6}, {"s1", "s2"});
    REQUIRE(f.size() == 6);
    CHECK(f[0] == static_cast<double>(may_day));  // creation proxy
    CHECK(f[1] == 9);                             // karma = 3+2+4
    CHECK(f[2] == 1);                             // submissions
    CHECK(f[3] == 2);                             // comments
    CHECK(f[4] == 2);                             // s1 count
    CHECK(f[5] == 1);                             // s2 count

    SUBCASE("no posts before cutoff gives zero counts") {
        auto f0 = features_at(store, "u", {2017, 4}, {"s1", "s2"});
        CHECK(f0.segment(1, 5).norm() == 0.0);
    }
    SUBCASE("absent user gives the documented degenerate vector") {
        auto fa = features_at(store, "ghost", {2017, 6}, {"s1", "s2"});
        CHECK(fa.norm() == 0.0);
    }
}

TEST_CASE("mahalanobis distance basics") {
    Eigen::MatrixXd samples(40, 2);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 40; ++i) {
        samples(i, 0) = gauss(rng);
        samples(i, 1) = gauss(rng);
    }
    auto cov = estimate_covariance(samples);

    Eigen::VectorXd x(2), y(2);
    x << 1.0, 2.0;
    SUBCASE("identical points have zero distance") {
        CHECK(mahalanobis_distance(x, x, cov) == 0.0);
    }
    SUBCASE("identity covariance reduces to Euclidean distance") {
        CovarianceEstimate ident;
        ident.cov = Eigen::MatrixXd::Identity(2, 2);
        ident.inverse = ident.cov;
        ident.chol = ident.cov;
        y << 4.0, 6.0;
        CHECK(mahalanobis_distance(x, y, ident) == doctest::Approx(5.0));
    }
    SUBCASE("diagonal covariance matches the direct quadratic form") {
        CovarianceEstimate diag;
        diag.cov = Eigen::Vector2d(2.0, 0.5).asDiagonal();
        diag.inverse = Eigen::Vector2d(0.5, 2.0).asDiagonal();
        diag.chol = Eigen::Vector2d(std::sqrt(2.0), std::sqrt(0.5)).asDiagonal();
        y << x[0] + 1.0, x[1] + 1.0;
        CHECK(mahalanobis_distance(x, y, diag) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
    }
    SUBCASE("symmetry") {
        y << -3.0, 0.5;
        CHECK(mahalanobis_distance(x, y, cov) == doctest::Approx(mahalanobis_distance(y, x, cov)));
    }
    SUBCASE("dimension mismatch is an error") {
        Eigen::VectorXd z(3);
        z.setZero();
        CHECK_THROWS(mahalanobis_distance(x, z, cov));
    }
}

TEST_CASE("covariance: ridge keeps the inverse accurate") {
    // a constant column would be singular without the ridge
    Eigen::MatrixXd samples(30, 3);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 30; ++i) {
        samples(i, 0) = gauss(rng);
        samples(i, 1) = 5.0;  // constant
        samples(i, 2) = gauss(rng) * 10;
    }
    auto cov = estimate_covariance(samples);
    Eigen::MatrixXd prod = cov.cov * cov.inverse;
    CHECK((prod - Eigen::MatrixXd::Identity(3, 3)).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("mahalanobis distance is invariant under rescaling with re-estimated covariance") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd samples(60, 3);
    for (int i = 0; i < 60; ++i)
        for (int j = 0; j < 3; ++j) samples(i, j) = gauss(rng) * (j + 1);
    Eigen::Vector3d scale(2.0, 0.25, 10.0);
    Eigen::MatrixXd rescaled = samples.array().rowwise() * scale.transpose().array();

    auto cov1 = estimate_covariance(samples, 1e-12);
    auto cov2 = estimate_covariance(rescaled, 1e-12);
    Eigen::VectorXd x = samples.row(0), y = samples.row(1);
    Eigen::VectorXd xs = x.array() * scale.array(), ys = y.array() * scale.array();
    CHECK(mahalanobis_distance(x, y, cov1) ==
          doctest::Approx(mahalanobis_distance(xs, ys, cov2)).epsilon(1e-6));
}

namespace {

// Synthetic world with planted twins; returns (store, treatments, pool).
struct TwinWorld {
    fs::path dir;
    CorpusStore store;
    std::vector<std::string> treatments;
    std::vector<std::string> pool;
    nlohmann::json manifest;
};

TwinWorld make_twin_world(std::size_t n_treatment, std::uint64_t seed) {
    TwinWorld w;
    SynthSpec spec;
    spec.seed = seed;
    spec.n_treatment = n_treatment;
    spec.horizon_days = 40;
    spec.tokens_per_day = 20;
    spec.decoys_per_treatment = 4;
    w.dir = fs::temp_directory_path() / ("spillover_test_twins_" + std::to_string(seed));
    fs::remove_all(w.dir);
    auto out = generate_cohort(spec, w.dir);
    w.store.ingest({out.cohort_dump});
    w.manifest = nlohmann::json::parse(read_file(out.manifest));
    for (auto& [treat, _] : w.manifest["users"].items()) w.treatments.push_back(treat);
    for (const auto& name : w.store.authors())
        if (name.starts_with("twin") || name.starts_with("decoy")) w.pool.push_back(name);
    return w;
}

}  // namespace

TEST_CASE("match_pairs recovers planted twins at distance zero") {
    auto w = make_twin_world(12, 3);
    std::vector<std::string> features = {"ctrl_a", "ctrl_b", "ctrl_c", "banned_x"};
    auto pairs = match_pairs(w.store, w.treatments, w.pool, "target_sub", features, 99);
    REQUIRE(pairs.size() == w.treatments.size());
    std::set<std::string> used_controls;
    std::size_t twin_hits = 0;
    for (const auto& p : pairs) {
        CHECK(!used_controls.contains(p.control));  // no reuse
        used_controls.insert(p.control);
        CHECK(p.day0 == w.manifest["users"][p.treatment].get<std::int64_t>());
        if (p.control == w.manifest["twins"][p.treatment].get<std::string>()) {
            ++twin_hits;
            CHECK(p.distance < 1e-9);
        }
    }
    CHECK(twin_hits == pairs.size());

    SUBCASE("deterministic for a fixed seed") {
        auto again = match_pairs(w.store, w.treatments, w.pool, "target_sub", features, 99);
        REQUIRE(again.size() == pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            CHECK(again[i].treatment == pairs[i].treatment);
            CHECK(again[i].control == pairs[i].control);
        }
    }
}

TEST_CASE("matching ignores post-activation data") {
    auto w = make_twin_world(8, 5);
    std::vector<std::string> features = {"ctrl_a", "ctrl_b", "ctrl_c", "banned_x"};
    auto pairs = match_pairs(w.store, w.treatments, w.pool, "target_sub", features, 31);

    // append post-activation posts for some matched users and re-ingest
    std::ofstream extra(w.dir / "extra.ndjson");
    int seq = 0;
    for (const auto& p : pairs) {
        std::int64_t late = p.day0 + 200;
        nlohmann::json j{{"id", "zzz" + std::to_string(seq++)}, {"author", p.control},
                         {"subreddit", "ctrl_a"}, {"created_utc", late * 86400},
                         {"body", "late tokens here"}, {"score", 50}};
        extra << j.dump() << "\n";
    }
    extra.close();
    CorpusStore perturbed;
    perturbed.ingest({w.dir / "cohort.ndjson", w.dir / "extra.ndjson"});
    auto pairs2 = match_pairs(perturbed, w.treatments, w.pool, "target_sub", features, 31);
    REQUIRE(pairs2.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        CHECK(pairs2[i].treatment == pairs[i].treatment);
        CHECK(pairs2[i].control == pairs[i].control);
    }
}

TEST_CASE("match_pairs: exhausted pool reports progress") {
    auto w = make_twin_world(6, 11);
    std::vector<std::string> features = {"ctrl_a"};
    std::vector<std::string> tiny_pool(w.pool.begin(), w.pool.begin() + 3);
    CHECK_THROWS_WITH_AS(
        match_pairs(w.store, w.treatments, tiny_pool, "target_sub", features, 1),
        doctest::Contains("3"), std::runtime_error);
}

TEST_CASE("seeded_sample is deterministic and uniform-ish") {
    std::set<std::string> names;
    for (int i = 0; i < 100; ++i) names.insert("u" + std::to_string(i));
    auto a = seeded_sample(names, 20, 5);
    auto b = seeded_sample(names, 20, 5);
    CHECK(a == b);
    auto c = seeded_sample(names, 20, 6);
    CHECK(a != c);
    CHECK(a.size() == 20);
}
