#include "cyclesim/meanfield.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace cyclesim {

namespace {

constexpr double kSimplexTolerance = 1e-9;
constexpr double kBoundaryWarning = 1e-4;

void field_into(std::span<const double> u, const RateFunction& rate, std::span<double> out) {
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
    // Edge i -> i+1 moves mass from i+1 to i at rate f(u_i, u_{i+1}).
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t next = successor(i, n);
        const double flux = rate.value(u[i], u[next]);
        out[i] += flux;
        out[next] -= flux;
    }
}

void check_simplex(std::span<const double> u) {
    if (u.size() < 3) throw DomainError(fmt::format("need at least 3 species, got {}", u.size()));
    double sum = 0.0;
    for (double x : u) {
        if (!(x >= 0.0)) throw DomainError(fmt::format("initial component {} is negative", x));
        sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance)
        throw DomainError(fmt::format("initial state sums to {}, expected 1", sum));
}

}  // namespace

MassAction::MassAction(double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw DomainError(fmt::format("collision rate must be positive, got {}", lambda));
}

std::vector<double> vector_field(std::span<const double> u, const RateFunction& rate) {
    std::vector<double> out(u.size());
    field_into(u, rate, out);
    return out;
}

std::vector<double> vector_field(std::span<const double> u, double lambda) {
    return vector_field(u, MassAction(lambda));
}

ConservedQuantities conserved_quantities(std::span<const double> u) {
    ConservedQuantities q{0.0, 1.0};
    for (double x : u) {
        q.sum += x;
        q.product *= x;
    }
    return q;
}

namespace {

MeanFieldPath integrate_impl(std::span<const double> u0, const RateFunction& rate, double t_end, double step,
                             std::span<const double> grid, std::vector<std::vector<double>>* nodes) {
    check_simplex(u0);
    if (!(step > 0.0)) throw DomainError(fmt::format("step must be positive, got {}", step));
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError(fmt::format("bad t_end {}", t_end));

    const auto last_node = static_cast<std::int64_t>(std::ceil(t_end / step - 1e-9));

    MeanFieldPath path;
    path.step = step;
    std::vector<std::int64_t> sample_nodes;
    sample_nodes.reserve(grid.size());
    for (double g : grid) {
        if (g < 0.0 || g > t_end) throw DomainError(fmt::format("grid time {} outside [0, {}]", g, t_end));
        const auto k = static_cast<std::int64_t>(std::llround(g / step));
        if (!sample_nodes.empty() && k <= sample_nodes.back())
            throw DomainError(fmt::format("grid time {} does not advance after snapping to step {}", g, step));
        sample_nodes.push_back(std::min(k, last_node));
    }
    path.grid.reserve(grid.size());
    path.states.reserve(grid.size());
    path.invariant_audit.reserve(grid.size());

    const std::size_t n = u0.size();
    std::vector<double> u(u0.begin(), u0.end());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    path.min_component = *std::min_element(u.begin(), u.end());
    if (nodes) nodes->clear();

    std::size_t next_sample = 0;
    auto record = [&](std::int64_t k) {
        while (next_sample < sample_nodes.size() && sample_nodes[next_sample] == k) {
            const double t = static_cast<double>(k) * step;
            const auto q = conserved_quantities(u);
            path.grid.push_back(t);
            path.states.push_back(MeanFieldState{u, t});
            path.invariant_audit.push_back(
                InvariantRecord{t, q.sum, q.product, *std::min_element(u.begin(), u.end())});
            ++next_sample;
        }
    };

    record(0);
    if (nodes) nodes->push_back(u);
    for (std::int64_t k = 1; k <= last_node; ++k) {
        field_into(u, rate, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * step * k1[i];
        field_into(tmp, rate, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * step * k2[i];
        field_into(tmp, rate, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + step * k3[i];
        field_into(tmp, rate, k4);
        for (std::size_t i = 0; i < n; ++i) u[i] += step / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);

        for (double x : u) {
            if (!std::isfinite(x) || x < -10.0 * kSimplexTolerance)
                throw StepError(fmt::format("component {} at t = {} left the simplex", x,
                                            static_cast<double>(k) * step));
            path.min_component = std::min(path.min_component, x);
        }
        record(k);
        if (nodes) nodes->push_back(u);
    }
    path.warned_near_boundary = path.min_component < kBoundaryWarning;
    return path;
}

}  // namespace

MeanFieldPath integrate_with_nodes(std::span<const double> u0, const RateFunction& rate, double t_end, double step,
                                   std::span<const double> grid, std::vector<std::vector<double>>& nodes) {
    return integrate_impl(u0, rate, t_end, step, grid, &nodes);
}

MeanFieldPath integrate(std::span<const double> u0, const RateFunction& rate, double t_end, double step,
                        std::span<const double> grid) {
    return integrate_impl(u0, rate, t_end, step, grid, nullptr);
}

MeanFieldPath integrate(std::span<const double> u0, double lambda, double t_end, double step,
                        std::span<const double> grid) {
    return integrate(u0, MassAction(lambda), t_end, step, grid);
}

std::ptrdiff_t find_time(std::span<const double> grid, double t) {
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    const auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
    if (it != grid.end() && std::abs(*it - t) <= tol) return it - grid.begin();
    return -1;
}

}  // namespace cyclesim
