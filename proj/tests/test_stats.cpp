#include <doctest.h>

#include <cmath>
#include <vector>

#include "cyclesim/core.hpp"
#include "cyclesim/stats.hpp"

using namespace cyclesim;

TEST_CASE("basic summaries") {
    const std::vector<double> xs{4, 1, 3, 2, 5};
    CHECK(stats::mean(xs) == doctest::Approx(3.0));
    CHECK(stats::stddev(xs) == doctest::Approx(std::sqrt(2.5)));
    CHECK(stats::quantile(xs, 0.5) == doctest::Approx(3.0));
    CHECK(stats::quantile(xs, 0.0) == doctest::Approx(1.0));
    CHECK(stats::quantile(xs, 1.0) == doctest::Approx(5.0));
    CHECK(stats::quantile(xs, 0.1) == doctest::Approx(1.4));
}

TEST_CASE("Kolmogorov survival function") {
    // Reference values of the limiting distribution.
    CHECK(stats::kolmogorov_survival(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(stats::kolmogorov_survival(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(stats::kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("KS test accepts exponential samples and rejects a wrong rate") {
    auto rng = rng_stream(61, 0);
    std::vector<double> xs;
    for (int i = 0; i < 5000; ++i) xs.push_back(rng.exponential() / 2.0);
    CHECK(stats::ks_exponential(xs, 2.0).p_value > 0.01);
    CHECK(stats::ks_exponential(xs, 2.5).p_value < 1e-6);
}

TEST_CASE("chi-square goodness of fit") {
    const std::vector<std::size_t> even{100, 100, 100};
    const std::vector<double> thirds{1.0 / 3, 1.0 / 3, 1.0 / 3};
    const auto r = stats::chi_square(even, thirds);
    CHECK(r.statistic == doctest::Approx(0.0));
    CHECK(r.dof == 2);
    CHECK(r.p_value == doctest::Approx(1.0));

    // 2 dof: p = exp(-x/2).
    const std::vector<std::size_t> skew{120, 90, 90};
    const auto s = stats::chi_square(skew, thirds);
    CHECK(s.statistic == doctest::Approx(6.0));
    CHECK(s.p_value == doctest::Approx(std::exp(-3.0)));

    const std::vector<std::size_t> single{50, 0, 0};
    CHECK(stats::chi_square(single, std::vector<double>{1.0, 0.0, 0.0}).p_value == doctest::Approx(1.0));
    const std::vector<std::size_t> stray{50, 1, 0};
    CHECK(stats::chi_square(stray, std::vector<double>{1.0, 0.0, 0.0}).p_value == 0.0);
}

TEST_CASE("zero-sum restriction") {
    for (int n : {3, 5, 8}) {
        const Matrix q = stats::zero_sum_basis(n);
        CHECK(q.rows() == n);
        CHECK(q.cols() == n - 1);
        CHECK((q.transpose() * q - Matrix::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((q.transpose() * ColVector::Ones(n)).cwiseAbs().maxCoeff() < 1e-14);
    }
    // Differences along (1,...,1) are invisible.
    const Matrix a = Matrix::Identity(3, 3) - Matrix::Constant(3, 3, 1.0 / 3);
    const Matrix b = a + Matrix::Constant(3, 3, 5.0);
    CHECK(stats::zero_sum_relative_error(b, a) < 1e-14);
    CHECK(stats::zero_sum_relative_error(1.1 * a, a) == doctest::Approx(0.1));
}

TEST_CASE("sample covariance") {
    const std::vector<std::vector<double>> xs{{1, 2}, {3, 6}, {5, 10}};
    const Matrix s = stats::sample_covariance(xs);
    CHECK(s(0, 0) == doctest::Approx(4.0));
    CHECK(s(0, 1) == doctest::Approx(8.0));
    CHECK(s(1, 1) == doctest::Approx(16.0));
}
