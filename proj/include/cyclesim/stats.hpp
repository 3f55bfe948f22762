#pragma once

#include <span>
#include <vector>

#include "cyclesim/fluctuation.hpp"

namespace cyclesim::stats {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);
/// Linear-interpolation quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> xs, double q);

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int dof = 0;
};

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

/// One-sample KS test of `samples` against Exponential(rate), with
/// Stephens' small-sample correction.
TestResult ks_exponential(std::vector<double> samples, double rate);

/// Pearson chi-square goodness of fit over the categories with positive
/// probability. Any observation in a zero-probability category yields p = 0.
TestResult chi_square(std::span<const std::size_t> observed, std::span<const double> probabilities);

/// Unbiased covariance of the rows of `samples` (each an n-vector).
Matrix sample_covariance(const std::vector<std::vector<double>>& samples);

/// Orthonormal basis (n x (n-1)) of the subspace orthogonal to (1, ..., 1).
Matrix zero_sum_basis(int n);

/// Q^T A Q for the zero-sum basis Q.
Matrix restrict_to_zero_sum(const Matrix& a);

/// ||restrict(estimate - reference)||_F / ||restrict(reference)||_F.
double zero_sum_relative_error(const Matrix& estimate, const Matrix& reference);

}  // namespace cyclesim::stats
