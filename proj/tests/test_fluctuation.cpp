#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cyclesim/fluctuation.hpp"
#include "cyclesim/meanfield.hpp"
#include "cyclesim/simulate.hpp"
#include "cyclesim/stats.hpp"
#include "support.hpp"

using namespace cyclesim;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        Eigen::Index j = 0;
        for (double x : row) m(i, j++) = x;
        ++i;
    }
    return m;
}

// Central differences of the vector field, column k = d F / d u_k.
Matrix numeric_jacobian(const std::vector<double>& u, double lambda, double eps = 1e-6) {
    const auto n = static_cast<Eigen::Index>(u.size());
    Matrix j(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        auto up = u, down = u;
        up[static_cast<std::size_t>(k)] += eps;
        down[static_cast<std::size_t>(k)] -= eps;
        const auto fu = vector_field(up, lambda);
        const auto fd = vector_field(down, lambda);
        for (Eigen::Index i = 0; i < n; ++i)
            j(i, k) = (fu[static_cast<std::size_t>(i)] - fd[static_cast<std::size_t>(i)]) / (2 * eps);
    }
    return j;
}

CoefficientFn constant_coefficients(const Matrix& b, const Matrix& c) {
    return [b, c](double) { return Coefficients{b, c}; };
}

}  // namespace

TEST_CASE("drift matrix at reference points") {
    const std::vector<double> sym{1.0 / 3, 1.0 / 3, 1.0 / 3};
    const Matrix expected = from_rows({{0, 1, -1}, {-1, 0, 1}, {1, -1, 0}});
    CHECK((drift_matrix(sym, 3.0) - expected).cwiseAbs().maxCoeff() < 1e-15);

    const Matrix corner = from_rows({{0, 1, -1}, {0, -1, 0}, {0, 0, 1}});
    CHECK((drift_matrix(std::vector<double>{1, 0, 0}, 1.0) - corner).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("diffusion matrix at reference points") {
    const Matrix c = diffusion_matrix(std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}, 1.0);
    for (Eigen::Index j = 0; j < 3; ++j) {
        for (Eigen::Index k = 0; k < 3; ++k) CHECK(c(j, k) == doctest::Approx(j == k ? 2.0 / 9 : -1.0 / 9));
    }
    const ColVector ones = ColVector::Ones(3);
    CHECK((c * ones).norm() < 1e-16);
    CHECK(diffusion_matrix(std::vector<double>{1, 0, 0}, 1.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix structure at random simplex points") {
    auto rng = rng_stream(41, 0);
    for (int n : {3, 4, 5, 8, 12}) {
        for (int trial = 0; trial < 200; ++trial) {
            const double lambda = 0.2 + 4 * rng.uniform();
            const auto u = testing::random_simplex_point(rng, n);
            const Matrix b = drift_matrix(u, lambda);
            const Matrix c = diffusion_matrix(u, lambda);

            CHECK(b.colwise().sum().cwiseAbs().maxCoeff() < 1e-14 * lambda);
            CHECK((b - numeric_jacobian(u, lambda)).cwiseAbs().maxCoeff() < 1e-6);

            CHECK((c - c.transpose()).cwiseAbs().maxCoeff() == 0.0);
            CHECK((c * ColVector::Ones(n)).cwiseAbs().maxCoeff() < 1e-14);
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    const int d = std::abs(j - k);
                    if (d >= 2 && d <= n - 2) CHECK(c(j, k) == 0.0);
                }
            CHECK(min_eigenvalue(c) >= -1e-12);
            // Interior points: the leading (n-1) block is positive definite.
            if (*std::min_element(u.begin(), u.end()) > 1e-3)
                CHECK(min_eigenvalue(c.topLeftCorner(n - 1, n - 1)) > 0.0);
        }
    }
}

TEST_CASE("psd square root") {
    CHECK((psd_sqrt(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm() < 1e-15);
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 4, 1, 0;
    Matrix r = Matrix::Zero(3, 3);
    r.diagonal() << 2, 1, 0;
    CHECK((psd_sqrt(d) - r).norm() < 1e-15);

    auto rng = rng_stream(42, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = testing::random_simplex_point(rng, 6);
        const Matrix c = diffusion_matrix(u, 2.0);
        const Matrix s = psd_sqrt(c);
        CHECK((s - s.transpose()).norm() == 0.0);
        CHECK((s * s - c).cwiseAbs().maxCoeff() < 1e-12);
    }

    Matrix neg = Matrix::Identity(2, 2);
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(psd_sqrt(neg), NotPSD);
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.1;
    CHECK_THROWS_AS(psd_sqrt(asym), DomainError);
}

TEST_CASE("moment ODE with constant coefficients") {
    const std::vector<double> times{0.0, 0.5, 1.0, 2.0};
    const auto pure_noise = propagate_moments(constant_coefficients(Matrix::Zero(3, 3), Matrix::Identity(3, 3)),
                                              Matrix::Zero(3, 3), 0.01, times);
    REQUIRE(pure_noise.size() == times.size());
    for (const auto& s : pure_noise) CHECK((s.sigma - s.time * Matrix::Identity(3, 3)).norm() < 1e-12);

    // Scalar Ornstein-Uhlenbeck: S' = -2 a S + q, S(0) = 0.
    const double a = 1.5, q = 0.7;
    const auto ou = propagate_moments(constant_coefficients(Matrix::Constant(1, 1, -a), Matrix::Constant(1, 1, q)),
                                      Matrix::Zero(1, 1), 1e-3, times);
    for (const auto& s : ou) CHECK(s.sigma(0, 0) == doctest::Approx(q / (2 * a) * (1 - std::exp(-2 * a * s.time))));
}

TEST_CASE("covariance along the mean-field path") {
    const std::vector<double> u0{0.5, 0.3, 0.2};
    const std::vector<double> grid{0.0, 0.5, 1.0};
    const auto model = make_fluctuation_model(u0, 1.0, 1.0, 1e-3, grid);
    const auto cov = propagate_covariance(model, Matrix::Zero(3, 3), 2e-3);
    REQUIRE(cov.size() == 3);
    const ColVector ones = ColVector::Ones(3);
    for (const auto& s : cov) {
        CHECK(std::abs(ones.dot(s.sigma * ones)) < 1e-10);
        CHECK((s.sigma - s.sigma.transpose()).norm() < 1e-14);
        CHECK(min_eigenvalue(s.sigma) > -1e-12);
    }
    CHECK(cov[2].sigma.trace() > cov[1].sigma.trace());

    // Halving the covariance step barely moves the answer.
    const auto fine = propagate_covariance(make_fluctuation_model(u0, 1.0, 1.0, 5e-4, grid), Matrix::Zero(3, 3), 1e-3);
    CHECK((fine[2].sigma - cov[2].sigma).cwiseAbs().maxCoeff() < 1e-9);

    CHECK_THROWS_AS(propagate_covariance(model, Matrix::Zero(3, 3), 3e-3), DomainError);
}

TEST_CASE("short-time covariance grows like c(0) t") {
    const std::vector<double> u0{0.5, 0.3, 0.2};
    const double h = 0.01;
    const auto model = make_fluctuation_model(u0, 1.0, h, 1e-3, std::vector<double>{0.0, h});
    const auto cov = propagate_covariance(model, Matrix::Zero(3, 3), 2e-3);
    const Matrix c0 = diffusion_matrix(u0, 1.0);
    CHECK((cov.back().sigma / h - c0).cwiseAbs().maxCoeff() < 10 * h);
}

TEST_CASE("non-PSD initial covariance is rejected") {
    const auto model = make_fluctuation_model(std::vector<double>{0.5, 0.3, 0.2}, 1.0, 1.0, 1e-3,
                                              std::vector<double>{0.0, 1.0});
    Matrix bad = Matrix::Zero(3, 3);
    bad(0, 0) = -1.0;
    CHECK_THROWS_AS(propagate_covariance(model, bad, 2e-3), NotPSD);
}

TEST_CASE("limit SDE without noise or drift is constant") {
    const std::vector<double> x{0.3, -0.1, -0.2};
    auto rng = rng_stream(1, 0);
    const auto path = simulate_limit_sde(constant_coefficients(Matrix::Zero(3, 3), Matrix::Zero(3, 3)),
                                         InitialLaw::point(x), 0.01, std::vector<double>{0.0, 0.5, 1.0}, rng);
    REQUIRE(path.values.size() == 3);
    for (const auto& v : path.values) CHECK(v == x);
}

TEST_CASE("limit SDE keeps the total fixed") {
    const auto model = make_fluctuation_model(std::vector<double>{0.5, 0.3, 0.2}, 1.0, 1.0, 1e-3,
                                              uniform_grid(1.0, 11));
    auto rng = rng_stream(2, 0);
    const auto path = simulate_limit_sde(model, InitialLaw::zero(3), 1e-3, rng);
    for (const auto& v : path.values) CHECK(std::abs(v[0] + v[1] + v[2]) < 1e-10);
}

TEST_CASE("ensemble paths match single paths") {
    const auto model = make_fluctuation_model(std::vector<double>{0.4, 0.4, 0.2}, 2.0, 0.5, 1e-3,
                                              uniform_grid(0.5, 6));
    const auto paths = simulate_limit_sde_ensemble(model, InitialLaw::zero(3), 2e-3, 4, 9);
    REQUIRE(paths.size() == 4);
    for (std::uint64_t i = 0; i < 4; ++i) {
        auto rng = rng_stream(9, i);
        CHECK(paths[i] == simulate_limit_sde(model, InitialLaw::zero(3), 2e-3, rng));
    }
    CHECK(paths[0] != paths[1]);
}

TEST_CASE("Gaussian initial law") {
    Matrix cov = Matrix::Zero(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    const InitialLaw law{{1.0, -1.0}, cov};
    auto rng = rng_stream(3, 0);
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < 20000; ++i) xs.push_back(law.sample(rng));
    const Matrix s = stats::sample_covariance(xs);
    // Standard error of a variance estimate is about sqrt(2/N) * variance.
    CHECK((s - cov).cwiseAbs().maxCoeff() < 0.1);
    double m0 = 0.0;
    for (const auto& x : xs) m0 += x[0] / 20000.0;
    CHECK(std::abs(m0 - 1.0) < 0.05);
}
