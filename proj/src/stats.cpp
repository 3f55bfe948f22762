#include "cyclesim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

namespace cyclesim::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw DomainError("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double kolmogorov_survival(double x) {
    if (x < 1e-3) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * x * x);
        sum += term;
        if (std::abs(term) < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) throw DomainError("KS test needs samples");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = -std::expm1(-rate * samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    const double root_n = std::sqrt(n);
    return TestResult{d, kolmogorov_survival((root_n + 0.12 + 0.11 / root_n) * d), 0};
}

TestResult chi_square(std::span<const std::size_t> observed, std::span<const double> probabilities) {
    if (observed.size() != probabilities.size()) throw DomainError("category count mismatch");
    const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::size_t{0}));
    if (total == 0.0) throw DomainError("chi-square test needs observations");

    double statistic = 0.0;
    int active = 0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (probabilities[i] <= 0.0) {
            if (observed[i] > 0) return TestResult{std::numeric_limits<double>::infinity(), 0.0, 0};
            continue;
        }
        ++active;
        const double expected = total * probabilities[i];
        const double diff = static_cast<double>(observed[i]) - expected;
        statistic += diff * diff / expected;
    }
    const int dof = active - 1;
    if (dof < 1) return TestResult{statistic, 1.0, 0};
    const boost::math::chi_squared dist(dof);
    return TestResult{statistic, boost::math::cdf(boost::math::complement(dist, statistic)), dof};
}

Matrix sample_covariance(const std::vector<std::vector<double>>& samples) {
    if (samples.size() < 2) throw DomainError("covariance needs at least two samples");
    const auto n = static_cast<Eigen::Index>(samples.front().size());
    ColVector m = ColVector::Zero(n);
    for (const auto& s : samples) m += Eigen::Map<const ColVector>(s.data(), n);
    m /= static_cast<double>(samples.size());
    Matrix cov = Matrix::Zero(n, n);
    for (const auto& s : samples) {
        const ColVector d = Eigen::Map<const ColVector>(s.data(), n) - m;
        cov.noalias() += d * d.transpose();
    }
    return cov / static_cast<double>(samples.size() - 1);
}

Matrix zero_sum_basis(int n) {
    if (n < 2) throw DomainError(fmt::format("zero-sum basis needs n >= 2, got {}", n));
    // Helmert contrasts: column k is (1, ..., 1, -k, 0, ...) / sqrt(k (k + 1)).
    Matrix q = Matrix::Zero(n, n - 1);
    for (int k = 1; k < n; ++k) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
        for (int i = 0; i < k; ++i) q(i, k - 1) = scale;
        q(k, k - 1) = -static_cast<double>(k) * scale;
    }
    return q;
}

Matrix restrict_to_zero_sum(const Matrix& a) {
    const Matrix q = zero_sum_basis(static_cast<int>(a.rows()));
    return q.transpose() * a * q;
}

double zero_sum_relative_error(const Matrix& estimate, const Matrix& reference) {
    const double ref = restrict_to_zero_sum(reference).norm();
    const double diff = restrict_to_zero_sum(estimate - reference).norm();
    if (ref == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / ref;
}

}  // namespace cyclesim::stats
