#include "cyclesim/fluctuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace cyclesim {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kClampTolerance = 1e-9;
constexpr double kPropagationTolerance = 1e-6;
constexpr double kNodeTolerance = 1e-6;

double max_asymmetry(const Matrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

void require_symmetric(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) throw DomainError(fmt::format("{} is {}x{}, not square", what, m.rows(), m.cols()));
    if (m.size() > 0 && max_asymmetry(m) > kSymmetryTolerance)
        throw DomainError(fmt::format("{} is not symmetric (asymmetry {})", what, max_asymmetry(m)));
}

// Index k with |k * unit - t| small, or throws.
std::int64_t snap(double t, double unit, const char* what) {
    const auto k = static_cast<std::int64_t>(std::llround(t / unit));
    if (k < 0 || std::abs(static_cast<double>(k) * unit - t) > kNodeTolerance * unit)
        throw DomainError(fmt::format("{} {} is not a multiple of {}", what, t, unit));
    return k;
}

std::vector<std::int64_t> snap_grid(std::span<const double> times, double step) {
    std::vector<std::int64_t> ks;
    ks.reserve(times.size());
    for (double t : times) {
        if (t < 0.0) throw DomainError(fmt::format("negative output time {}", t));
        const auto k = static_cast<std::int64_t>(std::llround(t / step));
        if (!ks.empty() && k <= ks.back())
            throw DomainError(fmt::format("output time {} does not advance after snapping to step {}", t, step));
        ks.push_back(k);
    }
    return ks;
}

std::int64_t whole_ratio(double step, double unit) {
    if (!(step > 0.0)) throw DomainError(fmt::format("step must be positive, got {}", step));
    const double ratio = step / unit;
    const auto m = static_cast<std::int64_t>(std::llround(ratio));
    if (m < 1 || std::abs(ratio - static_cast<double>(m)) > kNodeTolerance)
        throw DomainError(fmt::format("step {} is not a whole multiple of the ODE step {}", step, unit));
    return m;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Matrix drift_matrix(std::span<const double> u, const RateFunction& rate) {
    const auto n = static_cast<Eigen::Index>(u.size());
    Matrix b = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index next = (i + 1) % n;
        const double fx = rate.d_dx(u[i], u[next]);
        const double fy = rate.d_dy(u[i], u[next]);
        // Flux of edge i enters component i and leaves component i+1.
        b(i, i) += fx;
        b(i, next) += fy;
        b(next, i) -= fx;
        b(next, next) -= fy;
    }
    return b;
}

Matrix drift_matrix(std::span<const double> u, double lambda) { return drift_matrix(u, MassAction(lambda)); }

Matrix diffusion_matrix(std::span<const double> u, const RateFunction& rate) {
    const auto n = static_cast<Eigen::Index>(u.size());
    Matrix c = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index next = (i + 1) % n;
        const double f = rate.value(u[i], u[next]);
        c(i, i) += f;
        c(next, next) += f;
        c(i, next) -= f;
        c(next, i) -= f;
    }
    return c;
}

Matrix diffusion_matrix(std::span<const double> u, double lambda) { return diffusion_matrix(u, MassAction(lambda)); }

Matrix psd_sqrt(const Matrix& c) {
    require_symmetric(c, "matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(c));
    if (eig.info() != Eigen::Success) throw NumericError("eigen decomposition failed");
    ColVector roots = eig.eigenvalues();
    // Eigenvalues within rounding of zero are zero; their square roots
    // would otherwise inject noise of order sqrt(eps) along null directions.
    const double noise = static_cast<double>(roots.size()) * std::numeric_limits<double>::epsilon() *
                         roots.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < roots.size(); ++i) {
        if (roots(i) < -kClampTolerance)
            throw NotPSD(fmt::format("eigenvalue {} below -{}", roots(i), kClampTolerance));
        roots(i) = roots(i) > noise ? std::sqrt(roots(i)) : 0.0;
    }
    const Matrix& v = eig.eigenvectors();
    return symmetrized(v * roots.asDiagonal() * v.transpose());
}

double min_eigenvalue(const Matrix& symmetric) {
    if (symmetric.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(symmetric), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

double FluctuationModel::lambda() const {
    if (const auto* mass = dynamic_cast<const MassAction*>(rate.get())) return mass->lambda();
    return std::nan("");
}

std::span<const double> FluctuationModel::state_at(double t) const {
    const auto k = snap(t, ode_step, "time");
    if (static_cast<std::size_t>(k) >= nodes.size())
        throw DomainError(fmt::format("time {} is past the end of the mean-field path", t));
    return nodes[static_cast<std::size_t>(k)];
}

FluctuationModel make_fluctuation_model(std::span<const double> u0, std::shared_ptr<const RateFunction> rate,
                                        double t_end, double ode_step, std::span<const double> grid) {
    if (!rate) throw DomainError("no rate function");
    FluctuationModel model;
    model.n = static_cast<int>(u0.size());
    model.ode_step = ode_step;
    model.path = integrate_with_nodes(u0, *rate, t_end, ode_step, grid, model.nodes);
    model.rate = std::move(rate);
    return model;
}

FluctuationModel make_fluctuation_model(std::span<const double> u0, double lambda, double t_end, double ode_step,
                                        std::span<const double> grid) {
    return make_fluctuation_model(u0, std::make_shared<MassAction>(lambda), t_end, ode_step, grid);
}

CoefficientFn model_coefficients(const FluctuationModel& model) {
    return [&model](double t) {
        const auto u = model.state_at(t);
        return Coefficients{drift_matrix(u, *model.rate), diffusion_matrix(u, *model.rate)};
    };
}

std::vector<CovarianceState> propagate_moments(const CoefficientFn& coefficients, const Matrix& sigma0, double step,
                                               std::span<const double> out_times) {
    if (!(step > 0.0)) throw DomainError(fmt::format("step must be positive, got {}", step));
    require_symmetric(sigma0, "initial covariance");
    if (min_eigenvalue(sigma0) < -kClampTolerance) throw NotPSD("initial covariance is not positive semi-definite");

    const auto out_nodes = snap_grid(out_times, step);
    std::vector<CovarianceState> out;
    out.reserve(out_nodes.size());
    if (out_nodes.empty()) return out;

    auto rhs = [](const Coefficients& k, const Matrix& s) -> Matrix {
        return k.drift * s + s * k.drift.transpose() + k.diffusion;
    };

    Matrix sigma = sigma0;
    std::size_t next_out = 0;
    Coefficients at_start = coefficients(0.0);
    for (std::int64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * step;
        while (next_out < out_nodes.size() && out_nodes[next_out] == k) {
            out.push_back(CovarianceState{sigma, t});
            ++next_out;
        }
        if (next_out == out_nodes.size()) break;

        const Coefficients mid = coefficients(t + 0.5 * step);
        Coefficients at_end = coefficients(static_cast<double>(k + 1) * step);
        const Matrix k1 = rhs(at_start, sigma);
        const Matrix k2 = rhs(mid, sigma + 0.5 * step * k1);
        const Matrix k3 = rhs(mid, sigma + 0.5 * step * k2);
        const Matrix k4 = rhs(at_end, sigma + step * k3);
        sigma = symmetrized(sigma + step / 6.0 * (k1 + 2.0 * (k2 + k3) + k4));
        if (!sigma.allFinite()) throw NumericError(fmt::format("covariance diverged at t = {}", t + step));
        const double lowest = min_eigenvalue(sigma);
        if (lowest < -kPropagationTolerance)
            throw NotPSD(fmt::format("covariance eigenvalue {} at t = {}", lowest, t + step));
        at_start = std::move(at_end);
    }
    return out;
}

std::vector<CovarianceState> propagate_covariance(const FluctuationModel& model, const Matrix& sigma0, double step) {
    const auto m = whole_ratio(step, model.ode_step);
    if (m % 2 != 0)
        throw DomainError(fmt::format("covariance step {} must be an even multiple of the ODE step {}", step,
                                      model.ode_step));
    for (double t : model.path.grid) snap(t, step, "path grid time");
    auto states = propagate_moments(model_coefficients(model), sigma0, step, model.path.grid);
    for (std::size_t i = 0; i < states.size(); ++i) states[i].time = model.path.grid[i];
    return states;
}

std::vector<double> InitialLaw::sample(RngStream& rng) const {
    if (!covariance) return mean;
    const Matrix root = psd_sqrt(*covariance);
    ColVector xi(root.rows());
    for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
    const ColVector draw = root * xi;
    std::vector<double> v(mean);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += draw(static_cast<Eigen::Index>(i));
    return v;
}

namespace {

struct SdeStep {
    Matrix drift;
    Matrix root;
};

GaussianPath euler_maruyama(const std::function<const SdeStep&(std::int64_t)>& step_at, const InitialLaw& v0,
                            double step, std::span<const double> grid, RngStream& rng) {
    const auto out_nodes = snap_grid(grid, step);
    GaussianPath path;
    path.seed = rng.seed();
    path.grid.reserve(out_nodes.size());
    path.values.reserve(out_nodes.size());

    const std::vector<double> start = v0.sample(rng);
    const auto n = static_cast<Eigen::Index>(start.size());
    ColVector v = Eigen::Map<const ColVector>(start.data(), n);
    ColVector xi(n), noise(n), drift(n);
    const double root_step = std::sqrt(step);

    std::size_t next_out = 0;
    for (std::int64_t k = 0;; ++k) {
        while (next_out < out_nodes.size() && out_nodes[next_out] == k) {
            path.grid.push_back(static_cast<double>(k) * step);
            path.values.emplace_back(v.data(), v.data() + n);
            ++next_out;
        }
        if (next_out == out_nodes.size()) break;
        const SdeStep& s = step_at(k);
        for (Eigen::Index i = 0; i < n; ++i) xi(i) = rng.normal();
        drift.noalias() = s.drift * v;
        noise.noalias() = s.root * xi;
        v += step * drift + root_step * noise;
    }
    return path;
}

}  // namespace

GaussianPath simulate_limit_sde(const CoefficientFn& coefficients, const InitialLaw& v0, double step,
                                std::span<const double> grid, RngStream& rng) {
    if (!(step > 0.0)) throw DomainError(fmt::format("step must be positive, got {}", step));
    SdeStep current;
    return euler_maruyama(
        [&](std::int64_t k) -> const SdeStep& {
            Coefficients c = coefficients(static_cast<double>(k) * step);
            current.drift = std::move(c.drift);
            current.root = psd_sqrt(c.diffusion);
            return current;
        },
        v0, step, grid, rng);
}

GaussianPath simulate_limit_sde(const FluctuationModel& model, const InitialLaw& v0, double step, RngStream& rng) {
    whole_ratio(step, model.ode_step);
    for (double t : model.path.grid) snap(t, step, "path grid time");
    GaussianPath path = simulate_limit_sde(model_coefficients(model), v0, step, model.path.grid, rng);
    path.grid = model.path.grid;
    return path;
}

std::vector<GaussianPath> simulate_limit_sde_ensemble(const FluctuationModel& model, const InitialLaw& v0,
                                                      double step, std::size_t paths, std::uint64_t base_seed) {
    whole_ratio(step, model.ode_step);
    for (double t : model.path.grid) snap(t, step, "path grid time");
    const auto out_nodes = snap_grid(model.path.grid, step);
    const std::int64_t steps = out_nodes.empty() ? 0 : out_nodes.back();

    const CoefficientFn coefficients = model_coefficients(model);
    std::vector<SdeStep> table(static_cast<std::size_t>(steps));
    for (std::int64_t k = 0; k < steps; ++k) {
        Coefficients c = coefficients(static_cast<double>(k) * step);
        table[static_cast<std::size_t>(k)] = SdeStep{std::move(c.drift), psd_sqrt(c.diffusion)};
    }

    std::vector<GaussianPath> out;
    out.reserve(paths);
    for (std::size_t i = 0; i < paths; ++i) {
        RngStream rng = rng_stream(base_seed, i);
        GaussianPath path = euler_maruyama(
            [&](std::int64_t k) -> const SdeStep& { return table[static_cast<std::size_t>(k)]; }, v0, step,
            model.path.grid, rng);
        path.grid = model.path.grid;
        out.push_back(std::move(path));
    }
    return out;
}

}  // namespace cyclesim
