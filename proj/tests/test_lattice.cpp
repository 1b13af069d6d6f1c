#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "smartboost/error.hpp"
#include "smartboost/lattice.hpp"
#include "test_support.hpp"

using namespace smartboost;
using namespace smartboost::lattice;
using smartboost::testing::make_lattice;

TEST_CASE("build_lattice canonicalizes order and injects Nil") {
    SUBCASE("empty") {
        auto lat = build_lattice({});
        CHECK(lat.size() == 0);
    }
    SUBCASE("overlapping pair") {
        auto lat = make_lattice({{{0, 2}, {"e1"}}, {{1, 3}, {"e2"}}});
        REQUIRE(lat.size() == 2);
        CHECK(lat.overlaps(0, 1));
        CHECK(lat.overlaps(1, 0));
        CHECK_FALSE(lat.overlaps(0, 0));
        CHECK(lat[0].options == std::vector<std::string>{"NIL", "e1"});
    }
    SUBCASE("disjoint pair") {
        auto lat = make_lattice({{{0, 1}, {"e1"}}, {{2, 3}, {"e2"}}});
        CHECK_FALSE(lat.overlaps(0, 1));
    }
    SUBCASE("sorted by (start, end), ties by input order") {
        auto lat = make_lattice({{{2, 4}, {"a"}}, {{0, 3}, {"b"}}, {{0, 1}, {"c"}}, {{0, 1}, {"d"}}});
        CHECK(lat[0].options[1] == "c");
        CHECK(lat[1].options[1] == "d");
        CHECK(lat[2].options[1] == "b");
        CHECK(lat[3].options[1] == "a");
        CHECK(lat[0].source_index == 2);
        CHECK(lat[3].source_index == 0);
    }
    SUBCASE("explicit Nil is moved to index 0") {
        auto lat = make_lattice({{{0, 1}, {"x", "NIL", "y"}}});
        CHECK(lat[0].options == std::vector<std::string>{"NIL", "x", "y"});
    }
    SUBCASE("malformed span") {
        CHECK_THROWS_AS(make_lattice({{{2, 2}, {"e"}}}), Error);
        try {
            make_lattice({{{3, 1}, {"e"}}});
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::MalformedSpan);
        }
    }
}

TEST_CASE("log_partition on hand-enumerated instances") {
    CHECK(log_partition(build_lattice({}), {}) == doctest::Approx(0.0));

    auto one = make_lattice({{{0, 1}, {"e"}}});
    CHECK(log_partition(one, {{0.0, 0.0}}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // Valid configs {(Nil,Nil),(e,Nil),(Nil,e)}.
    auto two = make_lattice({{{0, 2}, {"e"}}, {{1, 3}, {"e"}}});
    CHECK(log_partition(two, {{0, 0}, {0, 0}}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(log_partition_backward(two, {{0, 0}, {0, 0}}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("marginals on hand-enumerated instances") {
    auto one = make_lattice({{{0, 1}, {"e"}}});
    auto r1 = marginals(one, {{0.0, 0.0}});
    CHECK(r1.marginals[0][0] == doctest::Approx(0.5));
    CHECK(r1.marginals[0][1] == doctest::Approx(0.5));

    auto two = make_lattice({{{0, 2}, {"e"}}, {{1, 3}, {"e"}}});
    auto r2 = marginals(two, {{0, 0}, {0, 0}});
    CHECK(r2.marginals[0][1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(r2.marginals[0][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    auto apart = make_lattice({{{0, 1}, {"e"}}, {{2, 3}, {"e"}}});
    auto r3 = marginals(apart, {{0, 0}, {0, 0}});
    for (const auto& row : r3.marginals)
        for (double p : row) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));

    // Nil-only candidate.
    auto nil_only = make_lattice({{{0, 1}, {}}});
    auto r4 = marginals(nil_only, {{3.0}});
    CHECK(r4.marginals[0][0] == 1.0);
    CHECK(r4.log_partition == doctest::Approx(3.0));
}

TEST_CASE("viterbi on hand-enumerated instances") {
    auto one = make_lattice({{{0, 1}, {"e"}}});
    auto v1 = viterbi(one, {{0.0, 2.0}});
    CHECK(v1.assignment.choice == std::vector<std::size_t>{1});
    CHECK(v1.score == doctest::Approx(2.0));

    auto two = make_lattice({{{0, 2}, {"e1"}}, {{1, 3}, {"e2"}}});
    auto v2 = viterbi(two, {{0, 2}, {0, 1}});
    CHECK(v2.assignment.choice == std::vector<std::size_t>{1, 0});
    CHECK(v2.score == doctest::Approx(2.0));

    auto v3 = viterbi(two, {{0, 0}, {0, 0}});
    CHECK(v3.assignment.choice == std::vector<std::size_t>{0, 0});
    CHECK(v3.score == 0.0);

    // Tie between entities resolves to the lower option index.
    auto multi = make_lattice({{{0, 1}, {"a", "b"}}});
    CHECK(viterbi(multi, {{0, 1, 1}}).assignment.choice == std::vector<std::size_t>{1});

    // Tie between two non-overlapping selections that are equally good: both
    // candidates 0 and 1 overlap candidate 2, taking {0,1} vs {2}.
    auto chain = make_lattice({{{0, 1}, {"a"}}, {{1, 2}, {"b"}}, {{0, 2}, {"c"}}});
    // Canonical order: (0,1) a, (0,2) c, (1,2) b.
    auto v4 = viterbi(chain, {{0, 1}, {0, 2}, {0, 1}});
    CHECK(v4.score == doctest::Approx(2.0));
    CHECK(v4.assignment.choice == std::vector<std::size_t>{0, 1, 0});
    auto bf = brute_force(chain, {{0, 1}, {0, 2}, {0, 1}});
    CHECK(v4.assignment == bf.best.assignment);
}

TEST_CASE("shape errors") {
    auto one = make_lattice({{{0, 1}, {"e"}}});
    CHECK_THROWS_AS(log_partition(one, {}), Error);
    CHECK_THROWS_AS(marginals(one, {{0.0}}), Error);
    CHECK_THROWS_AS(viterbi(one, {{0.0, 1.0, 2.0}}), Error);
    CHECK_THROWS_AS(viterbi(one, {{0.0, std::nan("")}}), Error);
}

TEST_CASE("brute_force basics") {
    auto empty = brute_force(build_lattice({}), {});
    CHECK(empty.inference.log_partition == 0.0);
    CHECK(empty.best.assignment.choice.empty());

    auto one = make_lattice({{{0, 1}, {"e"}}});
    auto r = brute_force(one, {{0.0, std::log(3.0)}});
    CHECK(r.inference.marginals[0][1] == doctest::Approx(0.75).epsilon(1e-12));

    std::vector<CandidateInput> big;
    for (int k = 0; k < 12; ++k) big.push_back({{k, k + 1}, {"a", "b", "c"}});
    auto lat = build_lattice(big);
    try {
        brute_force(lat, zero_scores(lat));
        FAIL("expected OracleTooLarge");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OracleTooLarge);
    }
}

TEST_CASE("DP agrees with brute force on random lattices") {
    std::mt19937_64 rng(20150301);
    for (int trial = 0; trial < 300; ++trial) {
        auto lat = testing::random_lattice(rng);
        auto scores = testing::random_scores(rng, lat);
        auto bf = brute_force(lat, scores);
        auto inf = marginals(lat, scores);
        CHECK(std::abs(inf.log_partition - bf.inference.log_partition) <= 1e-9);
        CHECK(std::abs(log_partition_backward(lat, scores) - inf.log_partition) <= 1e-9);
        for (std::size_t k = 0; k < lat.size(); ++k) {
            double sum = 0.0;
            for (std::size_t u = 0; u < lat.num_options(k); ++u) {
                CHECK(std::abs(inf.marginals[k][u] - bf.inference.marginals[k][u]) <= 1e-9);
                sum += inf.marginals[k][u];
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
        auto v = viterbi(lat, scores);
        CHECK(is_valid(lat, v.assignment));
        CHECK(std::abs(v.score - bf.best.score) <= 1e-9);
        CHECK(v.assignment == bf.best.assignment);
    }
}

TEST_CASE("per-factor shift invariance") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> shift(-10.0, 10.0);
    for (int trial = 0; trial < 100; ++trial) {
        auto lat = testing::random_lattice(rng);
        if (lat.empty()) continue;
        auto scores = testing::random_scores(rng, lat);
        const std::size_t k = rng() % lat.size();
        const double c = shift(rng);
        auto shifted = scores;
        for (double& s : shifted[k]) s += c;
        auto a = marginals(lat, scores);
        auto b = marginals(lat, shifted);
        CHECK(std::abs(b.log_partition - a.log_partition - c) <= 1e-9);
        for (std::size_t i = 0; i < lat.size(); ++i)
            for (std::size_t u = 0; u < lat.num_options(i); ++u)
                CHECK(std::abs(a.marginals[i][u] - b.marginals[i][u]) <= 1e-9);
        CHECK(viterbi(lat, scores).assignment == viterbi(lat, shifted).assignment);
    }
}

TEST_CASE("large scores stay finite") {
    auto two = make_lattice({{{0, 2}, {"e"}}, {{1, 3}, {"e"}}});
    auto r = marginals(two, {{-800, 900}, {1000, -700}});
    CHECK(std::isfinite(r.log_partition));
    // (e, Nil) scores 1900, far above (Nil, Nil) = 200 and (Nil, e) = -1500.
    CHECK(r.log_partition == doctest::Approx(1900.0));
    CHECK(r.marginals[0][1] == doctest::Approx(1.0));
    CHECK(r.marginals[1][1] == doctest::Approx(0.0));
}

TEST_CASE("runtime grows nearly linearly on non-overlapping lattices") {
    auto build = [](int K) {
        std::vector<CandidateInput> in;
        for (int k = 0; k < K; ++k) in.push_back({{2 * k, 2 * k + 1}, {"a", "b", "c"}});
        return build_lattice(in);
    };
    auto time_it = [](const MentionLattice& lat) {
        std::mt19937_64 rng(1);
        auto scores = testing::random_scores(rng, lat);
        std::vector<double> samples;
        for (int rep = 0; rep < 7; ++rep) {
            auto t0 = std::chrono::steady_clock::now();
            for (int i = 0; i < 20; ++i) {
                auto r = marginals(lat, scores);
                CHECK(std::isfinite(r.log_partition));
            }
            samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        std::sort(samples.begin(), samples.end());
        return samples[samples.size() / 2];
    };
    const double t1 = time_it(build(4000));
    const double t2 = time_it(build(8000));
    MESSAGE("K=4000: " << t1 << "s, K=8000: " << t2 << "s");
    CHECK(t2 / t1 < 3.0);
}
