#pragma once

// Shared generators for the property tests.

#include <cstdint>
#include <vector>

#include "cyclesim/core.hpp"

namespace testing {

/// Uniform point on the open simplex (normalized exponentials).
inline std::vector<double> random_simplex_point(cyclesim::RngStream& rng, int n) {
    std::vector<double> u(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& x : u) {
        x = rng.exponential();
        sum += x;
    }
    for (double& x : u) x /= sum;
    return u;
}

/// Counts summing to `total`, each individual placed uniformly at random.
inline std::vector<cyclesim::Count> random_counts(cyclesim::RngStream& rng, int n, cyclesim::Count total) {
    std::vector<cyclesim::Count> x(static_cast<std::size_t>(n), 0);
    for (cyclesim::Count k = 0; k < total; ++k) ++x[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n))];
    return x;
}

}  // namespace testing
