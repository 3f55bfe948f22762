#include "cyclesim/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <fmt/format.h>

namespace cyclesim {

std::optional<Proposal> propose_event(const SimState& state, const ModelSpec& spec) {
    std::optional<Proposal> best;
    for (std::size_t j = 0; j < state.clocks.size(); ++j) {
        const double rate = propensity(spec, state.counts, j);
        if (rate <= 0.0) continue;
        const double wait = state.clocks[j].gap() / rate;
        if (!best || wait < best->wait) best = Proposal{j, wait};
    }
    return best;
}

namespace {

constexpr double kClockTolerance = 1e-9;

void advance_clocks_except(SimState& state, const ModelSpec& spec, double dt, std::size_t skip) {
    for (std::size_t j = 0; j < state.clocks.size(); ++j) {
        if (j == skip) continue;
        const double rate = propensity(spec, state.counts, j);
        if (rate <= 0.0) continue;
        PoissonClock& clock = state.clocks[j];
        clock.internal_time += rate * dt;
        if (clock.internal_time >= clock.next_threshold) {
            const double overrun = clock.internal_time - clock.next_threshold;
            if (overrun > kClockTolerance * std::max(1.0, clock.next_threshold))
                throw NumericError(fmt::format("clock {} overran its threshold {} by {}", j,
                                               clock.next_threshold, overrun));
            clock.internal_time = std::nextafter(clock.next_threshold, 0.0);
        }
    }
}

}  // namespace

void advance_clocks(SimState& state, const ModelSpec& spec, double dt) {
    advance_clocks_except(state, spec, dt, state.clocks.size());
}

void fire(SimState& state, const ModelSpec& spec, const Proposal& proposal, RngStream& rng) {
    const std::size_t j = proposal.reaction;
    const std::size_t n = state.counts.size();

    // The fired clock lands exactly on its threshold; the others must stay
    // strictly below theirs.
    advance_clocks_except(state, spec, proposal.wait, j);
    PoissonClock& clock = state.clocks[j];
    clock.internal_time = clock.next_threshold;
    clock.next_threshold += rng.exponential();

    state.time += proposal.wait;
    ++state.counts[j];
    --state.counts[successor(j, n)];
    ++state.event_count[j];
    check_state(state, spec);
}

StepResult next_event(SimState& state, const ModelSpec& spec, RngStream& rng) {
    const auto proposal = propose_event(state, spec);
    if (!proposal) return Absorbed{};
    fire(state, spec, *proposal, rng);
    return JumpEvent{state.time, static_cast<int>(proposal->reaction), state.counts};
}

Trajectory run_until(const ModelSpec& spec_in, double t_end, std::span<const double> grid, RngStream& rng,
                     const RunOptions& options) {
    const ModelSpec spec = validate_spec(spec_in);
    if (!(t_end > 0.0)) throw DomainError(fmt::format("t_end must be positive, got {}", t_end));
    if (!std::is_sorted(grid.begin(), grid.end())) throw DomainError("sample grid is not sorted");
    if (!grid.empty() && (grid.front() < 0.0 || grid.back() > t_end))
        throw DomainError(fmt::format("sample grid leaves [0, {}]", t_end));
    if (std::isinf(t_end) && !grid.empty()) throw DomainError("an unbounded run takes no sample grid");

    Trajectory traj;
    traj.spec = spec;
    traj.seed = rng.seed();
    traj.grid.assign(grid.begin(), grid.end());
    traj.samples.reserve(grid.size());

    SimState state = SimState::initial(spec, rng);

    double initial_rate = 0.0;
    for (std::size_t j = 0; j < state.counts.size(); ++j) initial_rate += propensity(spec, state.counts, j);
    switch (options.event_log) {
        case EventLog::Keep: traj.events_retained = true; break;
        case EventLog::Drop: traj.events_retained = false; break;
        case EventLog::Auto:
            traj.events_retained = std::isfinite(t_end) && initial_rate * t_end < options.auto_event_limit;
            break;
    }

    if (is_absorbing(state.counts)) traj.absorbed = 0.0;

    std::size_t next_sample = 0;
    std::uint64_t fired = 0;
    while (true) {
        const auto proposal = propose_event(state, spec);
        const double next_time =
            proposal ? state.time + proposal->wait : std::numeric_limits<double>::infinity();
        if (!proposal || next_time > t_end) {
            if (std::isfinite(t_end)) {
                advance_clocks(state, spec, t_end - state.time);
                state.time = t_end;
            }
            break;
        }
        while (next_sample < grid.size() && grid[next_sample] < next_time) {
            traj.samples.push_back(state.counts);
            ++next_sample;
        }
        if (fired >= options.max_events)
            throw BudgetExceeded(fmt::format("event budget of {} exhausted at t = {}", options.max_events, state.time));
        fire(state, spec, *proposal, rng);
        ++fired;
        if (traj.events_retained)
            traj.events.push_back(JumpEvent{state.time, static_cast<int>(proposal->reaction), state.counts});
        if (is_absorbing(state.counts)) traj.absorbed = state.time;
    }
    while (next_sample < grid.size()) {
        traj.samples.push_back(state.counts);
        ++next_sample;
    }

    traj.end_time = state.time;
    traj.final_counts = state.counts;
    traj.final_internal_time.reserve(state.clocks.size());
    for (const auto& clock : state.clocks) traj.final_internal_time.push_back(clock.internal_time);
    traj.final_event_count = state.event_count;
    return traj;
}

Ensemble run_ensemble(const ModelSpec& spec_in, std::size_t replicas, double t_end, std::span<const double> grid,
                      std::uint64_t base_seed, const RunOptions& options) {
    const ModelSpec spec = validate_spec(spec_in);
    if (replicas < 1) throw DomainError("an ensemble needs at least one replica");

    Ensemble ensemble;
    ensemble.spec = spec;
    ensemble.grid.assign(grid.begin(), grid.end());
    ensemble.base_seed = base_seed;
    ensemble.t_end = t_end;
    ensemble.trajectories.resize(replicas);

    std::vector<std::exception_ptr> failures(replicas);
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor++; i < replicas; i = cursor++) {
            try {
                RngStream rng = rng_stream(base_seed, i);
                ensemble.trajectories[i] = run_until(spec, t_end, grid, rng, options);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };

    unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, replicas));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < replicas; ++i) {
        if (!failures[i]) continue;
        try {
            std::rethrow_exception(failures[i]);
        } catch (const std::exception& e) {
            throw ReplicaError(i, e.what());
        }
    }
    return ensemble;
}

std::vector<double> uniform_grid(double t_end, std::size_t points) {
    if (points == 0) return {};
    if (points == 1) return {0.0};
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k)
        grid[k] = t_end * static_cast<double>(k) / static_cast<double>(points - 1);
    grid.back() = t_end;
    return grid;
}

}  // namespace cyclesim
