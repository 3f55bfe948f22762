#include "cyclesim/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace cyclesim {

ReplicaError::ReplicaError(std::size_t replica, const std::string& what)
    : Error(fmt::format("replica {}: {}", replica, what)), replica_(replica) {}

ModelSpec validate_spec(ModelSpec spec) {
    if (spec.n < 3) throw DomainError(fmt::format("species count must be >= 3, got {}", spec.n));
    if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda))
        throw DomainError(fmt::format("collision rate must be positive, got {}", spec.lambda));
    if (spec.total < 1) throw DomainError(fmt::format("population size must be >= 1, got {}", spec.total));
    if (spec.initial.size() != static_cast<std::size_t>(spec.n))
        throw DomainError(fmt::format("expected {} initial counts, got {}", spec.n, spec.initial.size()));
    for (Count x : spec.initial)
        if (x < 0) throw DomainError(fmt::format("negative initial count {}", x));
    const Count sum = std::accumulate(spec.initial.begin(), spec.initial.end(), Count{0});
    if (sum != spec.total)
        throw NormalizationError(
            fmt::format("initial counts [{}] sum to {}, expected {}", fmt::join(spec.initial, ","), sum, spec.total));
    return spec;
}

std::vector<Count> counts_from_fractions(std::span<const double> fractions, Count total) {
    if (fractions.empty()) throw DomainError("no fractions given");
    double norm = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) throw DomainError(fmt::format("negative fraction {}", f));
        norm += f;
    }
    if (!(norm > 0.0)) throw DomainError("fractions sum to zero");

    std::vector<Count> counts(fractions.size());
    std::vector<double> remainder(fractions.size());
    Count assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double exact = fractions[i] / norm * static_cast<double>(total);
        counts[i] = static_cast<Count>(std::floor(exact));
        remainder[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
        ++counts[order[k]];
        ++assigned;
    }
    return counts;
}

double propensity(const ModelSpec& spec, std::span<const Count> counts, std::size_t reaction) {
    const std::size_t next = successor(reaction, counts.size());
    return spec.lambda / static_cast<double>(spec.total) * static_cast<double>(counts[reaction]) *
           static_cast<double>(counts[next]);
}

bool is_absorbing(std::span<const Count> counts) {
    for (std::size_t j = 0; j < counts.size(); ++j)
        if (counts[j] > 0 && counts[successor(j, counts.size())] > 0) return false;
    return true;
}

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    std::uint64_t s = index;
    const std::uint64_t mixed_index = splitmix64(s);
    std::uint64_t t = base_seed ^ mixed_index;
    return splitmix64(t);
}

std::mt19937_64 make_engine(std::uint64_t seed) {
    std::uint64_t s = seed;
    std::array<std::uint32_t, 8> words{};
    for (std::size_t i = 0; i < words.size(); i += 2) {
        const std::uint64_t w = splitmix64(s);
        words[i] = static_cast<std::uint32_t>(w);
        words[i + 1] = static_cast<std::uint32_t>(w >> 32);
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t base_seed, std::uint64_t index)
    : seed_(derive_seed(base_seed, index)), engine_(make_engine(seed_)) {}

double RngStream::uniform() {
    // 53 random mantissa bits, offset by half an ulp so 0 and 1 never occur.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::normal() {
    boost::random::normal_distribution<double> dist;
    return dist(engine_);
}

RngStream rng_stream(std::uint64_t base_seed, std::uint64_t replica_index) {
    return RngStream(base_seed, replica_index);
}

SimState SimState::initial(const ModelSpec& spec, RngStream& rng) {
    SimState state;
    state.counts = spec.initial;
    state.clocks.resize(static_cast<std::size_t>(spec.n));
    for (auto& clock : state.clocks) clock.next_threshold = rng.exponential();
    state.event_count.assign(static_cast<std::size_t>(spec.n), 0);
    return state;
}

void check_state(const SimState& state, const ModelSpec& spec) {
    Count sum = 0;
    for (Count x : state.counts) {
        if (x < 0 || x > spec.total) throw std::logic_error(fmt::format("count {} out of [0, {}]", x, spec.total));
        sum += x;
    }
    if (sum != spec.total)
        throw std::logic_error(fmt::format("counts sum to {}, population is {}", sum, spec.total));
}

}  // namespace cyclesim
