#pragma once

// Domain types shared by the simulator, the deterministic limit and the
// validation harness of the n-species cyclic collision model.
//
// Species are 0-based. Reaction j is the collision of species j with its
// cyclic successor j+1 (mod n); it turns the j+1 individual into a j.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cyclesim {

using Count = std::int64_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Initial counts do not sum to the population size.
class NormalizationError : public Error {
public:
    using Error::Error;
};

/// A parameter lies outside its admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Clock bookkeeping went inconsistent (an internal time passed its threshold).
class NumericError : public Error {
public:
    using Error::Error;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

class StepError : public Error {
public:
    using Error::Error;
};

class NotPSD : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

class InsufficientReplicas : public Error {
public:
    using Error::Error;
};

class MissingEventLog : public Error {
public:
    using Error::Error;
};

/// Wraps a failure raised while simulating one replica of an ensemble.
class ReplicaError : public Error {
public:
    ReplicaError(std::size_t replica, const std::string& what);
    std::size_t replica() const noexcept { return replica_; }

private:
    std::size_t replica_;
};

constexpr std::size_t successor(std::size_t i, std::size_t n) noexcept { return (i + 1) % n; }
constexpr std::size_t predecessor(std::size_t i, std::size_t n) noexcept { return (i + n - 1) % n; }

struct ModelSpec {
    int n = 3;
    double lambda = 1.0;
    Count total = 0;
    std::vector<Count> initial;

    bool operator==(const ModelSpec&) const = default;
};

/// Returns `spec` unchanged when it is well formed; throws DomainError or
/// NormalizationError otherwise.
ModelSpec validate_spec(ModelSpec spec);

/// Integer counts summing to `total` whose shares approximate `fractions`
/// (largest-remainder rounding, ties to the lower index).
std::vector<Count> counts_from_fractions(std::span<const double> fractions, Count total);

/// Per-reaction intensity (lambda/M) * X_j * X_{j+1}.
double propensity(const ModelSpec& spec, std::span<const Count> counts, std::size_t reaction);

/// True when no cyclically adjacent pair is jointly present.
bool is_absorbing(std::span<const Count> counts);

/// Deterministic random stream owned by one replica.
///
/// The engine seed is derived from (base_seed, index) with a splitmix64
/// mix, so a replica's draws do not depend on which thread runs it or in
/// what order. Satisfies UniformRandomBitGenerator.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t base_seed, std::uint64_t index);

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform();
    /// Unit-rate exponential.
    double exponential();
    /// Standard normal.
    double normal();

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

RngStream rng_stream(std::uint64_t base_seed, std::uint64_t replica_index);

/// Unit Poisson process read through a random time change.
///
/// `internal_time` is the accumulated intensity of the reaction and
/// `next_threshold` the next arrival of the underlying unit-rate process.
struct PoissonClock {
    double internal_time = 0.0;
    double next_threshold = 0.0;

    double gap() const noexcept { return next_threshold - internal_time; }
};

struct SimState {
    std::vector<Count> counts;
    double time = 0.0;
    std::vector<PoissonClock> clocks;
    std::vector<Count> event_count;

    /// Initial counts from `spec`, zero internal times, one exponential
    /// threshold drawn per clock.
    static SimState initial(const ModelSpec& spec, RngStream& rng);
};

/// Throws std::logic_error when `state` breaks conservation or bounds.
void check_state(const SimState& state, const ModelSpec& spec);

struct JumpEvent {
    double time = 0.0;
    int reaction = 0;
    std::vector<Count> counts_after;

    bool operator==(const JumpEvent&) const = default;
};

struct Trajectory {
    ModelSpec spec;
    std::uint64_t seed = 0;
    std::vector<JumpEvent> events;
    bool events_retained = true;
    std::vector<double> grid;
    std::vector<std::vector<Count>> samples;
    std::optional<double> absorbed;

    // State of the run when it stopped (at t_end, or at absorption when
    // t_end is unbounded).
    double end_time = 0.0;
    std::vector<Count> final_counts;
    std::vector<double> final_internal_time;
    std::vector<Count> final_event_count;

    bool operator==(const Trajectory&) const = default;
};

}  // namespace cyclesim
