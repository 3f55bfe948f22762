#pragma once

// Deterministic limit of the cyclic collision model:
//
//   du_i/dt = f(u_i, u_{i+1}) - f(u_{i-1}, u_i),   i = 0..n-1 (cyclic),
//
// with f(x, y) = lambda * x * y built in. Along the flow sum(u) and, for
// mass action, prod(u) are conserved.

#include <memory>
#include <span>
#include <vector>

#include "cyclesim/core.hpp"

namespace cyclesim {

/// Interaction intensity f(x, y) between a species (x) and its prey (y),
/// with the partial derivatives the fluctuation matrices need.
class RateFunction {
public:
    virtual ~RateFunction() = default;
    virtual double value(double x, double y) const = 0;
    virtual double d_dx(double x, double y) const = 0;
    virtual double d_dy(double x, double y) const = 0;
};

/// f(x, y) = lambda * x * y.
class MassAction final : public RateFunction {
public:
    explicit MassAction(double lambda);
    double value(double x, double y) const override { return lambda_ * x * y; }
    double d_dx(double, double y) const override { return lambda_ * y; }
    double d_dy(double x, double) const override { return lambda_ * x; }
    double lambda() const noexcept { return lambda_; }

private:
    double lambda_;
};

std::vector<double> vector_field(std::span<const double> u, const RateFunction& rate);
std::vector<double> vector_field(std::span<const double> u, double lambda);

struct ConservedQuantities {
    double sum = 0.0;
    double product = 0.0;
};

ConservedQuantities conserved_quantities(std::span<const double> u);

struct MeanFieldState {
    std::vector<double> u;
    double time = 0.0;
};

struct InvariantRecord {
    double time = 0.0;
    double sum = 0.0;
    double product = 0.0;
    double min_component = 0.0;
};

struct MeanFieldPath {
    /// Output times, each snapped to the nearest multiple of `step`.
    std::vector<double> grid;
    std::vector<MeanFieldState> states;
    std::vector<InvariantRecord> invariant_audit;
    double step = 0.0;
    /// Smallest component seen at any integrator node.
    double min_component = 0.0;
    /// Set when some component fell below 1e-4.
    bool warned_near_boundary = false;
};

/// Classical fixed-step RK4 from u0 (on the simplex) up to t_end, sampled at
/// `grid`. Throws StepError when a component goes below -1e-8 or stops
/// being finite.
MeanFieldPath integrate(std::span<const double> u0, const RateFunction& rate, double t_end, double step,
                        std::span<const double> grid);
MeanFieldPath integrate(std::span<const double> u0, double lambda, double t_end, double step,
                        std::span<const double> grid);

/// Same integration, also returning the state at every integrator node
/// (node k sits at time k * step).
MeanFieldPath integrate_with_nodes(std::span<const double> u0, const RateFunction& rate, double t_end, double step,
                                   std::span<const double> grid, std::vector<std::vector<double>>& nodes);

/// Index of the path grid entry at time t, or -1 if none lies within a
/// relative 1e-9.
std::ptrdiff_t find_time(std::span<const double> grid, double t);

}  // namespace cyclesim
