#pragma once

// Statistical checks of simulated ensembles against the deterministic
// limit, the Gaussian fluctuation limit and the martingale structure of
// the compensated reaction counters.
//
// Every pass threshold lives in ValidateConfig. The limit theorems are
// qualitative, so the defaults are calibrations, not derived constants.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclesim/core.hpp"
#include "cyclesim/fluctuation.hpp"
#include "cyclesim/meanfield.hpp"
#include "cyclesim/simulate.hpp"

namespace cyclesim {

struct ValidateConfig {
    double lln_median_bound = 0.05;
    double lln_ratio_min = 1.6;
    double lln_ratio_max = 2.5;
    double clt_frobenius_tol = 0.15;
    std::size_t clt_min_replicas = 100;
    double martingale_z = 3.0;
    double p_threshold = 0.01;
    double sde_frobenius_tol = 0.10;
};

// ---------------------------------------------------------------- LLN

struct LlnEntry {
    Count total = 0;
    std::size_t replicas = 0;
    /// Per replica: max over grid times s <= t of ||X(s)/M - u(s)||_1.
    std::vector<double> deviations;
    double median = 0.0;
    double q95 = 0.0;
};

struct LlnReport {
    double time = 0.0;
    std::vector<LlnEntry> entries;
    /// median(M_k) / median(M_{k+1}) for successive sizes.
    std::vector<double> median_ratios;
    bool monotone = false;
    bool bound_ok = false;
    bool ratios_ok = false;
    bool pass = false;
};

/// Sup deviation is taken over grid points only, so it is a lower bound on
/// the true sup over [0, t]. Ensembles must be ordered by increasing M.
LlnReport lln_test(std::span<const Ensemble> ensembles, const MeanFieldPath& meanfield, double t,
                   const ValidateConfig& config = {});

// ---------------------------------------------------------------- CLT

struct CltReport {
    double time = 0.0;
    std::size_t replicas = 0;
    Count total = 0;
    std::vector<double> mean;
    Matrix empirical;
    Matrix reference;
    /// (empirical - reference) / asymptotic standard error, per entry.
    Matrix z_scores;
    /// Frobenius relative error on the zero-sum subspace.
    double frobenius_relative_error = 0.0;
    /// max over replicas of |sum_i Y_i|.
    double max_abs_total = 0.0;
    bool degenerate = false;
    bool pass = false;
};

CltReport clt_test(const Ensemble& ensemble, const MeanFieldPath& meanfield, const CovarianceState& covariance,
                   const ValidateConfig& config = {});

// ---------------------------------------------------------- martingale

struct MomentCheck {
    double mean = 0.0;
    double standard_error = 0.0;
    double z = 0.0;
    bool pass = false;
};

struct ReactionRecord {
    int reaction = 0;
    double mean_count = 0.0;
    double mean_internal_time = 0.0;
    /// E[N(T) - T] = 0.
    MomentCheck compensated;
    /// E[(N(T) - T)^2 - T] = 0.
    MomentCheck quadratic_variation;
};

struct CrossRecord {
    int first = 0;
    int second = 0;
    /// E[(N_j - T_j)(N_k - T_k)] = 0.
    MomentCheck product;
};

struct MartingaleReport {
    double time = 0.0;
    std::size_t replicas = 0;
    std::vector<ReactionRecord> reactions;
    std::vector<CrossRecord> cross;
    bool pass = false;
};

/// Jump counts N_j and internal times T_j of every reaction at time t,
/// rebuilt from a trajectory's event log.
struct ClockReadout {
    std::vector<Count> counts;
    std::vector<double> internal_times;
};

ClockReadout clock_readout(const Trajectory& trajectory, double t);

MartingaleReport martingale_test(const Ensemble& ensemble, double t, const ValidateConfig& config = {});

// ---------------------------------------------------- next-event law

struct GillespieReport {
    std::size_t samples = 0;
    std::vector<double> rates;
    double total_rate = 0.0;
    std::vector<double> probabilities;
    std::vector<std::size_t> frequencies;
    double ks_statistic = 0.0;
    double ks_p = 0.0;
    double chi2_statistic = 0.0;
    int chi2_dof = 0;
    double chi2_p = 0.0;
    bool pass = false;
};

/// Draws `samples` first events from the spec's initial state and tests the
/// waiting time against Exponential(total rate) and the fired reaction
/// against rates / total rate.
GillespieReport gillespie_equivalence_test(const ModelSpec& spec, std::size_t samples, std::uint64_t base_seed,
                                           const ValidateConfig& config = {});

// ------------------------------------------------- SDE vs moment ODE

struct SdeReport {
    double time = 0.0;
    std::size_t paths = 0;
    Matrix empirical;
    Matrix reference;
    double frobenius_relative_error = 0.0;
    /// max over paths and grid times of |sum_i V_i(t) - sum_i V_i(0)|.
    double max_total_drift = 0.0;
    bool pass = false;
};

/// Empirical covariance of simulated limit paths at the last grid time
/// against the propagated covariance there.
SdeReport sde_consistency_test(const std::vector<GaussianPath>& paths, const CovarianceState& reference,
                               const ValidateConfig& config = {});

nlohmann::ordered_json to_json(const LlnReport& report);
nlohmann::ordered_json to_json(const CltReport& report);
nlohmann::ordered_json to_json(const MartingaleReport& report);
nlohmann::ordered_json to_json(const GillespieReport& report);
nlohmann::ordered_json to_json(const SdeReport& report);

}  // namespace cyclesim
