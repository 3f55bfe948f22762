#pragma once

// Gaussian fluctuations around the deterministic limit. The rescaled
// deviation sqrt(M) (X/M - u) converges to the linear diffusion
//
//   dV = b(t) V dt + c(t)^{1/2} dW,
//
// where b is the Jacobian of the cyclic vector field and c the banded
// matrix of reaction intensities, both evaluated along u(t).

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cyclesim/core.hpp"
#include "cyclesim/meanfield.hpp"

namespace cyclesim {

using Matrix = Eigen::MatrixXd;
using ColVector = Eigen::VectorXd;

/// Jacobian of the cyclic vector field at u.
Matrix drift_matrix(std::span<const double> u, const RateFunction& rate);
Matrix drift_matrix(std::span<const double> u, double lambda);

/// Cyclic band matrix: f(u_i,u_{i+1}) + f(u_{i-1},u_i) on the diagonal,
/// -f(u_j,u_{j+1}) at (j,j+1) and (j+1,j), zero elsewhere.
Matrix diffusion_matrix(std::span<const double> u, const RateFunction& rate);
Matrix diffusion_matrix(std::span<const double> u, double lambda);

/// Symmetric square root by spectral decomposition. Eigenvalues in
/// [-1e-9, 0) are clamped to zero; anything lower throws NotPSD. Throws
/// DomainError when `c` is asymmetric by more than 1e-12.
Matrix psd_sqrt(const Matrix& c);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& symmetric);

/// Mean-field path plus the integrator nodes the coefficients are read from.
struct FluctuationModel {
    std::shared_ptr<const RateFunction> rate;
    int n = 0;
    /// Spacing of `nodes`; node k is u(k * ode_step).
    double ode_step = 0.0;
    std::vector<std::vector<double>> nodes;
    MeanFieldPath path;

    double lambda() const;
    /// Node lookup; `t` must sit on a node (within 1e-6 of a step).
    std::span<const double> state_at(double t) const;
};

FluctuationModel make_fluctuation_model(std::span<const double> u0, std::shared_ptr<const RateFunction> rate,
                                        double t_end, double ode_step, std::span<const double> grid);
FluctuationModel make_fluctuation_model(std::span<const double> u0, double lambda, double t_end, double ode_step,
                                        std::span<const double> grid);

struct Coefficients {
    Matrix drift;
    Matrix diffusion;
};

/// Time-dependent (b(t), c(t)) of a linear SDE.
using CoefficientFn = std::function<Coefficients(double)>;

/// Coefficients read off the model's mean-field nodes.
CoefficientFn model_coefficients(const FluctuationModel& model);

struct CovarianceState {
    Matrix sigma;
    double time = 0.0;
};

/// RK4 integration of dS/dt = b S + S b^T + c from S(0) = sigma0 with the
/// given step, reported at `out_times` (each snapped to a multiple of
/// `step`). Throws NotPSD when the minimum eigenvalue drops below -1e-6.
std::vector<CovarianceState> propagate_moments(const CoefficientFn& coefficients, const Matrix& sigma0, double step,
                                               std::span<const double> out_times);

/// Covariance along the model's path grid. `step` must be an even multiple
/// of the model's ODE step so the RK4 half-steps land on integrator nodes.
std::vector<CovarianceState> propagate_covariance(const FluctuationModel& model, const Matrix& sigma0, double step);

/// Law of V(0): a fixed vector, or a Gaussian when `covariance` is set.
struct InitialLaw {
    std::vector<double> mean;
    std::optional<Matrix> covariance;

    std::vector<double> sample(RngStream& rng) const;
    static InitialLaw point(std::vector<double> v) { return InitialLaw{std::move(v), std::nullopt}; }
    static InitialLaw zero(int n) { return point(std::vector<double>(static_cast<std::size_t>(n), 0.0)); }
};

struct GaussianPath {
    std::vector<double> grid;
    std::vector<std::vector<double>> values;
    std::uint64_t seed = 0;

    bool operator==(const GaussianPath&) const = default;
};

/// Euler-Maruyama: V <- V + b V h + c^{1/2} sqrt(h) xi, with the square root
/// recomputed each step. Output at `grid` (snapped to multiples of h).
GaussianPath simulate_limit_sde(const CoefficientFn& coefficients, const InitialLaw& v0, double step,
                                std::span<const double> grid, RngStream& rng);

/// Single path over the model's path grid; `step` must be a whole multiple
/// of the model's ODE step.
GaussianPath simulate_limit_sde(const FluctuationModel& model, const InitialLaw& v0, double step, RngStream& rng);

/// `paths` independent paths, path i driven by rng_stream(base_seed, i).
/// The per-step coefficients and square roots are shared by all paths.
std::vector<GaussianPath> simulate_limit_sde_ensemble(const FluctuationModel& model, const InitialLaw& v0,
                                                      double step, std::size_t paths, std::uint64_t base_seed);

}  // namespace cyclesim
