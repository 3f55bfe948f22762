#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "cyclesim/core.hpp"

using namespace cyclesim;

TEST_CASE("validate_spec accepts the minimal spec and rejects bad ones") {
    const ModelSpec ok{3, 1.0, 3, {1, 1, 1}};
    CHECK(validate_spec(ok) == ok);
    CHECK_THROWS_AS(validate_spec(ModelSpec{3, 1.0, 3, {1, 1, 2}}), NormalizationError);
    CHECK_THROWS_AS(validate_spec(ModelSpec{3, 0.0, 3, {1, 1, 1}}), DomainError);
    CHECK_THROWS_AS(validate_spec(ModelSpec{2, 1.0, 2, {1, 1}}), DomainError);
    CHECK_THROWS_AS(validate_spec(ModelSpec{3, 1.0, 3, {1, 1}}), DomainError);
    CHECK_THROWS_AS(validate_spec(ModelSpec{3, 1.0, 3, {4, -1, 0}}), DomainError);
    CHECK_THROWS_AS(validate_spec(ModelSpec{3, 1.0, 0, {0, 0, 0}}), DomainError);
}

TEST_CASE("cyclic neighbours") {
    CHECK(successor(2, 3) == 0);
    CHECK(predecessor(0, 3) == 2);
    CHECK(successor(1, 5) == 2);
}

TEST_CASE("rng streams are reproducible and distinct") {
    auto a = rng_stream(42, 0);
    auto b = rng_stream(42, 0);
    auto c = rng_stream(42, 1);
    std::vector<std::uint64_t> da, db, dc;
    for (int i = 0; i < 100; ++i) {
        da.push_back(a());
        db.push_back(b());
        dc.push_back(c());
    }
    CHECK(da == db);
    CHECK(da != dc);
    CHECK(rng_stream(42, 0).seed() != rng_stream(43, 0).seed());

    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(rng_stream(7, i).seed());
    CHECK(seeds.size() == 1000);
}

TEST_CASE("uniform draws have mean 1/2") {
    auto rng = rng_stream(7, 3);
    double sum = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / draws - 0.5) < 0.01);
}

TEST_CASE("exponential draws have unit mean") {
    auto rng = rng_stream(11, 0);
    double sum = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) sum += rng.exponential();
    // Standard error of the mean is 1/sqrt(draws).
    CHECK(std::abs(sum / draws - 1.0) < 4.0 / std::sqrt(draws));
}

TEST_CASE("counts_from_fractions preserves the total") {
    CHECK(counts_from_fractions(std::vector<double>{0.5, 0.3, 0.2}, 100) == std::vector<Count>{50, 30, 20});
    CHECK(counts_from_fractions(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 100) == std::vector<Count>{34, 33, 33});
    CHECK(counts_from_fractions(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 10000) ==
          std::vector<Count>{3334, 3333, 3333});

    auto rng = rng_stream(5, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 6);
        std::vector<double> f(static_cast<std::size_t>(n));
        double s = 0.0;
        for (double& x : f) s += (x = rng.exponential());
        for (double& x : f) x /= s;
        const Count total = 1 + static_cast<Count>(rng() % 5000);
        const auto counts = counts_from_fractions(f, total);
        CHECK(std::accumulate(counts.begin(), counts.end(), Count{0}) == total);
        for (std::size_t i = 0; i < f.size(); ++i)
            CHECK(std::abs(static_cast<double>(counts[i]) - f[i] * static_cast<double>(total)) < 1.0);
    }
}

TEST_CASE("propensity and absorption") {
    const ModelSpec spec{3, 3.0, 4, {2, 1, 1}};
    CHECK(propensity(spec, spec.initial, 0) == doctest::Approx(1.5));
    CHECK(propensity(spec, spec.initial, 1) == doctest::Approx(0.75));
    CHECK(propensity(spec, spec.initial, 2) == doctest::Approx(1.5));
    CHECK(is_absorbing(std::vector<Count>{3, 0, 0}));
    CHECK_FALSE(is_absorbing(std::vector<Count>{2, 1, 0}));
    CHECK(is_absorbing(std::vector<Count>{2, 0, 2, 0}));
    CHECK_FALSE(is_absorbing(std::vector<Count>{1, 0, 0, 1}));
}

TEST_CASE("initial state has fresh positive thresholds") {
    const ModelSpec spec{5, 1.0, 10, {2, 2, 2, 2, 2}};
    auto rng = rng_stream(1, 0);
    const SimState s = SimState::initial(spec, rng);
    CHECK(s.counts == spec.initial);
    CHECK(s.time == 0.0);
    REQUIRE(s.clocks.size() == 5);
    for (const auto& c : s.clocks) {
        CHECK(c.internal_time == 0.0);
        CHECK(c.gap() > 0.0);
    }
    CHECK_NOTHROW(check_state(s, spec));

    SimState broken = s;
    broken.counts[0] += 1;
    CHECK_THROWS_AS(check_state(broken, spec), std::logic_error);
}
