#pragma once

// Exact event-driven simulation by random time change of unit Poisson
// processes: each reaction owns a clock whose internal time grows at the
// reaction's intensity, and the reaction fires when its internal time
// reaches the next arrival of its unit-rate process.

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "cyclesim/core.hpp"

namespace cyclesim {

/// Reaction that would fire next and the wall-clock wait until it does.
struct Proposal {
    std::size_t reaction = 0;
    double wait = 0.0;
};

/// Smallest candidate wait over all active reactions; ties go to the lowest
/// index. Empty when every reaction is inactive (absorbing state).
std::optional<Proposal> propose_event(const SimState& state, const ModelSpec& spec);

/// Advances every clock by its intensity times `dt` using the current
/// counts. Throws NumericError when a clock overruns its threshold by more
/// than a relative 1e-9; smaller overruns are pulled back below it.
void advance_clocks(SimState& state, const ModelSpec& spec, double dt);

/// Applies `proposal`: moves time and clocks forward, updates counts, and
/// draws a fresh threshold for the fired clock.
void fire(SimState& state, const ModelSpec& spec, const Proposal& proposal, RngStream& rng);

struct Absorbed {
    bool operator==(const Absorbed&) const = default;
};

using StepResult = std::variant<JumpEvent, Absorbed>;

/// One jump of the process, or Absorbed when no reaction can fire.
StepResult next_event(SimState& state, const ModelSpec& spec, RngStream& rng);

enum class EventLog { Auto, Keep, Drop };

struct RunOptions {
    std::uint64_t max_events = 1'000'000'000;
    /// Auto keeps the event log when the initial total intensity times
    /// t_end is below `auto_event_limit`.
    EventLog event_log = EventLog::Auto;
    double auto_event_limit = 1e7;
    /// Worker threads for ensembles; 0 picks the hardware concurrency.
    unsigned threads = 0;
};

/// Simulates one replica on [0, t_end]. `grid` must be sorted and inside
/// [0, t_end]; t_end may be +inf when `grid` is empty, in which case the
/// run stops at absorption or when the event budget is exhausted.
Trajectory run_until(const ModelSpec& spec, double t_end, std::span<const double> grid, RngStream& rng,
                     const RunOptions& options = {});

struct Ensemble {
    ModelSpec spec;
    std::vector<Trajectory> trajectories;
    std::vector<double> grid;
    std::uint64_t base_seed = 0;
    double t_end = 0.0;

    bool operator==(const Ensemble&) const = default;
};

/// Replica i uses rng_stream(base_seed, i); the result does not depend on
/// the thread count.
Ensemble run_ensemble(const ModelSpec& spec, std::size_t replicas, double t_end, std::span<const double> grid,
                      std::uint64_t base_seed, const RunOptions& options = {});

/// `points` equally spaced times from 0 to t_end inclusive.
std::vector<double> uniform_grid(double t_end, std::size_t points);

}  // namespace cyclesim
