#include <doctest.h>

#include <cmath>
#include <limits>

#include "cyclesim/validate.hpp"

using namespace cyclesim;

namespace {

// Ensemble whose every replica sits exactly on M * u for constant u.
Ensemble frozen_ensemble(Count total, std::size_t replicas, const std::vector<double>& grid) {
    const Count third = total / 3;
    const ModelSpec spec{3, 1.0, total, {third, third, third}};
    Ensemble e;
    e.spec = spec;
    e.grid = grid;
    e.t_end = grid.back();
    for (std::size_t r = 0; r < replicas; ++r) {
        Trajectory t;
        t.spec = spec;
        t.grid = grid;
        t.samples.assign(grid.size(), spec.initial);
        t.events_retained = false;
        t.end_time = grid.back();
        e.trajectories.push_back(t);
    }
    return e;
}

}  // namespace

TEST_CASE("next-event law for (1,1,1) at rate 3") {
    const auto r = gillespie_equivalence_test(ModelSpec{3, 3.0, 3, {1, 1, 1}}, 10000, 123);
    CHECK(r.total_rate == doctest::Approx(3.0));
    for (double p : r.probabilities) CHECK(p == doctest::Approx(1.0 / 3));
    CHECK(r.pass);
    std::size_t total = 0;
    for (auto f : r.frequencies) total += f;
    CHECK(total == 10000);
}

TEST_CASE("next-event law with unequal rates") {
    const auto r = gillespie_equivalence_test(ModelSpec{3, 4.0, 4, {2, 1, 1}}, 10000, 5);
    REQUIRE(r.rates.size() == 3);
    CHECK(r.rates[0] == doctest::Approx(2.0));
    CHECK(r.rates[1] == doctest::Approx(1.0));
    CHECK(r.rates[2] == doctest::Approx(2.0));
    CHECK(r.probabilities[0] == doctest::Approx(0.4));
    CHECK(r.probabilities[1] == doctest::Approx(0.2));
    CHECK(r.probabilities[2] == doctest::Approx(0.4));
    CHECK(r.pass);
}

TEST_CASE("next-event law with a single active reaction") {
    const auto r = gillespie_equivalence_test(ModelSpec{3, 3.0, 3, {2, 1, 0}}, 2000, 6);
    CHECK(r.probabilities[0] == doctest::Approx(1.0));
    CHECK(r.frequencies[0] == 2000);
    CHECK(r.pass);
    CHECK_THROWS_AS(gillespie_equivalence_test(ModelSpec{3, 3.0, 3, {3, 0, 0}}, 10, 1), DomainError);
}

TEST_CASE("LLN deviations vanish on the mean-field path") {
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const auto path = integrate(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0, 1.0, 1e-3, grid);
    const std::vector<Ensemble> ensembles{frozen_ensemble(300, 5, grid), frozen_ensemble(600, 5, grid)};
    const auto r = lln_test(ensembles, path, 1.0);
    for (const auto& e : r.entries)
        for (double d : e.deviations) CHECK(d < 1e-15);
    CHECK(r.bound_ok);

    const std::vector<Ensemble> wrong_order{ensembles[1], ensembles[0]};
    CHECK_THROWS_AS(lln_test(wrong_order, path, 1.0), DomainError);
    CHECK_THROWS_AS(lln_test(ensembles, path, 0.75), GridMismatch);
}

TEST_CASE("CLT on a degenerate ensemble") {
    const std::vector<double> grid{0.0, 1.0};
    const auto model = make_fluctuation_model(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0, 1.0, 1e-3, grid);
    const auto cov = propagate_covariance(model, Matrix::Zero(3, 3), 2e-3);
    const auto r = clt_test(frozen_ensemble(300, 100, grid), model.path, cov.back());
    CHECK(r.empirical.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.degenerate);
    CHECK_FALSE(r.pass);
    CHECK_THROWS_AS(clt_test(frozen_ensemble(300, 99, grid), model.path, cov.back()), InsufficientReplicas);
}

TEST_CASE("martingale checks on an ensemble absorbed at time 0") {
    RunOptions opts;
    opts.event_log = EventLog::Keep;
    const auto e = run_ensemble(ModelSpec{3, 1.0, 50, {50, 0, 0}}, 10, 1.0, {}, 3, opts);
    const auto r = martingale_test(e, 1.0);
    for (const auto& rec : r.reactions) {
        CHECK(rec.mean_count == 0.0);
        CHECK(rec.mean_internal_time == 0.0);
        CHECK(rec.compensated.mean == 0.0);
        CHECK(rec.quadratic_variation.mean == 0.0);
    }
    for (const auto& c : r.cross) CHECK(c.product.mean == 0.0);
    CHECK(r.pass);
}

TEST_CASE("martingale checks need the event log") {
    RunOptions opts;
    opts.event_log = EventLog::Drop;
    const auto e = run_ensemble(ModelSpec{3, 1.0, 30, {10, 10, 10}}, 3, 1.0, {}, 3, opts);
    CHECK_THROWS_AS(martingale_test(e, 1.0), MissingEventLog);
}

TEST_CASE("clock readout reproduces the simulator's clocks") {
    const ModelSpec spec{4, 2.0, 40, {10, 10, 10, 10}};
    auto rng = rng_stream(17, 0);
    const auto t = run_until(spec, 1.5, {}, rng);
    const auto readout = clock_readout(t, 1.5);
    CHECK(readout.counts == t.final_event_count);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(readout.internal_times[j] == doctest::Approx(t.final_internal_time[j]).epsilon(1e-12));

    // Halfway: counts are those of events up to then.
    const auto half = clock_readout(t, 0.75);
    Count fired = 0;
    for (Count c : half.counts) fired += c;
    std::size_t expected = 0;
    for (const auto& ev : t.events) expected += ev.time <= 0.75;
    CHECK(static_cast<std::size_t>(fired) == expected);
    CHECK_THROWS_AS(clock_readout(t, 2.0), DomainError);
}

TEST_CASE("SDE consistency needs more than one path") {
    const std::vector<GaussianPath> one(1);
    CHECK_THROWS_AS(sde_consistency_test(one, CovarianceState{Matrix::Zero(3, 3), 1.0}), InsufficientReplicas);
}

TEST_CASE("reports serialize with a pass field") {
    const auto r = gillespie_equivalence_test(ModelSpec{3, 3.0, 3, {1, 1, 1}}, 500, 1);
    const auto j = to_json(r);
    CHECK(j.at("pass").get<bool>() == r.pass);
    CHECK(j.at("check").get<std::string>() == "gillespie");
}
