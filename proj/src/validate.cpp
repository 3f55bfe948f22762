#include "cyclesim/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cyclesim/stats.hpp"

namespace cyclesim {

namespace {

MomentCheck moment_check(std::span<const double> values, double z_threshold) {
    MomentCheck check;
    check.mean = stats::mean(values);
    check.standard_error = stats::stddev(values) / std::sqrt(static_cast<double>(values.size()));
    if (check.standard_error > 0.0)
        check.z = check.mean / check.standard_error;
    else
        check.z = check.mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    check.pass = std::abs(check.z) < z_threshold;
    return check;
}

std::size_t grid_index(std::span<const double> grid, double t, const char* what) {
    const auto idx = find_time(grid, t);
    if (idx < 0) throw GridMismatch(fmt::format("{} has no sample at t = {}", what, t));
    return static_cast<std::size_t>(idx);
}

nlohmann::ordered_json matrix_json(const Matrix& m) {
    auto rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json check_json(const MomentCheck& c) {
    return {{"mean", c.mean}, {"standard_error", c.standard_error}, {"z", c.z}, {"pass", c.pass}};
}

}  // namespace

LlnReport lln_test(std::span<const Ensemble> ensembles, const MeanFieldPath& meanfield, double t,
                   const ValidateConfig& config) {
    if (ensembles.empty()) throw DomainError("LLN test needs at least one ensemble");
    if (meanfield.states.empty()) throw GridMismatch("mean-field path is empty");
    const auto& u0 = meanfield.states.front().u;

    LlnReport report;
    report.time = t;
    for (const Ensemble& ensemble : ensembles) {
        const ModelSpec& spec = ensemble.spec;
        if (static_cast<std::size_t>(spec.n) != u0.size())
            throw DomainError(fmt::format("ensemble has {} species, mean-field path {}", spec.n, u0.size()));
        if (spec.lambda != ensembles.front().spec.lambda) throw DomainError("ensembles disagree on lambda");
        const double m = static_cast<double>(spec.total);
        for (std::size_t i = 0; i < u0.size(); ++i)
            if (std::abs(static_cast<double>(spec.initial[i]) / m - u0[i]) > 1.0 / m + 1e-12)
                throw DomainError(fmt::format("M = {}: initial fractions do not match the mean-field start", spec.total));

        grid_index(ensemble.grid, 0.0, "ensemble grid");
        grid_index(ensemble.grid, t, "ensemble grid");
        std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (ensemble idx, path idx)
        for (std::size_t g = 0; g < ensemble.grid.size(); ++g) {
            if (ensemble.grid[g] > t + 1e-9 * std::max(1.0, t)) break;
            pairs.emplace_back(g, grid_index(meanfield.grid, ensemble.grid[g], "mean-field path"));
        }

        LlnEntry entry;
        entry.total = spec.total;
        entry.replicas = ensemble.trajectories.size();
        entry.deviations.reserve(entry.replicas);
        for (const Trajectory& traj : ensemble.trajectories) {
            double sup = 0.0;
            for (const auto& [g, p] : pairs) {
                const auto& x = traj.samples[g];
                const auto& u = meanfield.states[p].u;
                double dist = 0.0;
                for (std::size_t i = 0; i < u.size(); ++i) dist += std::abs(static_cast<double>(x[i]) / m - u[i]);
                sup = std::max(sup, dist);
            }
            entry.deviations.push_back(sup);
        }
        entry.median = stats::quantile(entry.deviations, 0.5);
        entry.q95 = stats::quantile(entry.deviations, 0.95);
        report.entries.push_back(std::move(entry));
    }

    report.monotone = true;
    report.ratios_ok = true;
    for (std::size_t k = 0; k + 1 < report.entries.size(); ++k) {
        const double hi = report.entries[k].median;
        const double lo = report.entries[k + 1].median;
        if (report.entries[k + 1].total <= report.entries[k].total)
            throw DomainError("ensembles must be ordered by increasing population size");
        report.monotone = report.monotone && lo < hi;
        const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        report.median_ratios.push_back(ratio);
        report.ratios_ok = report.ratios_ok && ratio >= config.lln_ratio_min && ratio <= config.lln_ratio_max;
    }
    report.bound_ok = report.entries.back().median < config.lln_median_bound;
    report.pass = report.monotone && report.bound_ok;
    return report;
}

CltReport clt_test(const Ensemble& ensemble, const MeanFieldPath& meanfield, const CovarianceState& covariance,
                   const ValidateConfig& config) {
    const std::size_t replicas = ensemble.trajectories.size();
    if (replicas < config.clt_min_replicas)
        throw InsufficientReplicas(
            fmt::format("CLT test needs at least {} replicas, got {}", config.clt_min_replicas, replicas));

    CltReport report;
    report.time = covariance.time;
    report.replicas = replicas;
    report.total = ensemble.spec.total;
    const std::size_t g = grid_index(ensemble.grid, covariance.time, "ensemble grid");
    const auto& u = meanfield.states[grid_index(meanfield.grid, covariance.time, "mean-field path")].u;

    const double m = static_cast<double>(ensemble.spec.total);
    const double root_m = std::sqrt(m);
    std::vector<std::vector<double>> ys;
    ys.reserve(replicas);
    for (const Trajectory& traj : ensemble.trajectories) {
        std::vector<double> y(u.size());
        double total = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            y[i] = root_m * (static_cast<double>(traj.samples[g][i]) / m - u[i]);
            total += y[i];
        }
        report.max_abs_total = std::max(report.max_abs_total, std::abs(total));
        ys.push_back(std::move(y));
    }

    report.mean.assign(u.size(), 0.0);
    for (const auto& y : ys)
        for (std::size_t i = 0; i < y.size(); ++i) report.mean[i] += y[i] / static_cast<double>(replicas);
    report.empirical = stats::sample_covariance(ys);
    report.reference = covariance.sigma;

    const auto n = report.empirical.rows();
    report.z_scores = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const Matrix& s = report.empirical;
            const double se = std::sqrt((s(j, j) * s(k, k) + s(j, k) * s(j, k)) / static_cast<double>(replicas - 1));
            const double diff = s(j, k) - report.reference(j, k);
            report.z_scores(j, k) = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        }
    }

    report.degenerate = report.empirical.cwiseAbs().maxCoeff() == 0.0;
    report.frobenius_relative_error = stats::zero_sum_relative_error(report.empirical, report.reference);
    report.pass = !report.degenerate && report.frobenius_relative_error < config.clt_frobenius_tol;
    return report;
}

ClockReadout clock_readout(const Trajectory& trajectory, double t) {
    if (!trajectory.events_retained) throw MissingEventLog("trajectory was run without an event log");
    if (t < 0.0 || t > trajectory.end_time * (1.0 + 1e-12))
        throw DomainError(fmt::format("t = {} is outside the simulated interval [0, {}]", t, trajectory.end_time));

    const ModelSpec& spec = trajectory.spec;
    const auto n = static_cast<std::size_t>(spec.n);
    ClockReadout out;
    out.counts.assign(n, 0);
    out.internal_times.assign(n, 0.0);

    std::vector<Count> counts = spec.initial;
    double last = 0.0;
    auto accumulate_until = [&](double until) {
        for (std::size_t j = 0; j < n; ++j) out.internal_times[j] += propensity(spec, counts, j) * (until - last);
        last = until;
    };
    for (const JumpEvent& ev : trajectory.events) {
        if (ev.time > t) break;
        accumulate_until(ev.time);
        ++out.counts[static_cast<std::size_t>(ev.reaction)];
        counts = ev.counts_after;
    }
    accumulate_until(t);
    return out;
}

MartingaleReport martingale_test(const Ensemble& ensemble, double t, const ValidateConfig& config) {
    const std::size_t replicas = ensemble.trajectories.size();
    if (replicas < 2) throw InsufficientReplicas("martingale test needs at least two replicas");
    const auto n = static_cast<std::size_t>(ensemble.spec.n);

    std::vector<ClockReadout> readouts;
    readouts.reserve(replicas);
    for (const Trajectory& traj : ensemble.trajectories) readouts.push_back(clock_readout(traj, t));

    MartingaleReport report;
    report.time = t;
    report.replicas = replicas;
    report.pass = true;

    std::vector<double> compensated(replicas), quadratic(replicas), counts(replicas), times(replicas);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t r = 0; r < replicas; ++r) {
            const double nj = static_cast<double>(readouts[r].counts[j]);
            const double tj = readouts[r].internal_times[j];
            counts[r] = nj;
            times[r] = tj;
            compensated[r] = nj - tj;
            quadratic[r] = (nj - tj) * (nj - tj) - tj;
        }
        ReactionRecord rec;
        rec.reaction = static_cast<int>(j);
        rec.mean_count = stats::mean(counts);
        rec.mean_internal_time = stats::mean(times);
        rec.compensated = moment_check(compensated, config.martingale_z);
        rec.quadratic_variation = moment_check(quadratic, config.martingale_z);
        report.pass = report.pass && rec.compensated.pass && rec.quadratic_variation.pass;
        report.reactions.push_back(rec);
    }

    std::vector<double> product(replicas);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) {
            for (std::size_t r = 0; r < replicas; ++r) {
                const auto& ro = readouts[r];
                product[r] = (static_cast<double>(ro.counts[j]) - ro.internal_times[j]) *
                             (static_cast<double>(ro.counts[k]) - ro.internal_times[k]);
            }
            CrossRecord rec{static_cast<int>(j), static_cast<int>(k), moment_check(product, config.martingale_z)};
            report.pass = report.pass && rec.product.pass;
            report.cross.push_back(rec);
        }
    }
    return report;
}

GillespieReport gillespie_equivalence_test(const ModelSpec& spec_in, std::size_t samples, std::uint64_t base_seed,
                                           const ValidateConfig& config) {
    const ModelSpec spec = validate_spec(spec_in);
    if (samples == 0) throw DomainError("need at least one sample");
    const auto n = static_cast<std::size_t>(spec.n);

    GillespieReport report;
    report.samples = samples;
    for (std::size_t j = 0; j < n; ++j) {
        report.rates.push_back(propensity(spec, spec.initial, j));
        report.total_rate += report.rates.back();
    }
    if (!(report.total_rate > 0.0)) throw DomainError("initial state has no active reaction");
    for (double r : report.rates) report.probabilities.push_back(r / report.total_rate);

    report.frequencies.assign(n, 0);
    std::vector<double> waits;
    waits.reserve(samples);
    RngStream rng = rng_stream(base_seed, 0);
    for (std::size_t s = 0; s < samples; ++s) {
        SimState state = SimState::initial(spec, rng);
        const StepResult step = next_event(state, spec, rng);
        const auto& ev = std::get<JumpEvent>(step);
        waits.push_back(ev.time);
        ++report.frequencies[static_cast<std::size_t>(ev.reaction)];
    }

    const auto ks = stats::ks_exponential(std::move(waits), report.total_rate);
    const auto chi = stats::chi_square(report.frequencies, report.probabilities);
    report.ks_statistic = ks.statistic;
    report.ks_p = ks.p_value;
    report.chi2_statistic = chi.statistic;
    report.chi2_dof = chi.dof;
    report.chi2_p = chi.p_value;
    report.pass = report.ks_p > config.p_threshold && report.chi2_p > config.p_threshold;
    return report;
}

SdeReport sde_consistency_test(const std::vector<GaussianPath>& paths, const CovarianceState& reference,
                               const ValidateConfig& config) {
    if (paths.size() < 2) throw InsufficientReplicas("SDE consistency test needs at least two paths");
    SdeReport report;
    report.paths = paths.size();
    report.time = reference.time;
    const std::size_t g = grid_index(paths.front().grid, reference.time, "limit path grid");

    std::vector<std::vector<double>> finals;
    finals.reserve(paths.size());
    for (const GaussianPath& path : paths) {
        double start = 0.0;
        for (double v : path.values.front()) start += v;
        for (const auto& v : path.values) {
            double sum = 0.0;
            for (double x : v) sum += x;
            report.max_total_drift = std::max(report.max_total_drift, std::abs(sum - start));
        }
        finals.push_back(path.values[g]);
    }
    report.empirical = stats::sample_covariance(finals);
    report.reference = reference.sigma;
    report.frobenius_relative_error = stats::zero_sum_relative_error(report.empirical, report.reference);
    report.pass = report.frobenius_relative_error < config.sde_frobenius_tol;
    return report;
}

nlohmann::ordered_json to_json(const LlnReport& report) {
    nlohmann::ordered_json j;
    j["check"] = "lln";
    j["time"] = report.time;
    j["note"] = "sup deviation evaluated on the sampling grid; thresholds are calibration";
    auto entries = nlohmann::ordered_json::array();
    for (const auto& e : report.entries)
        entries.push_back({{"total", e.total}, {"replicas", e.replicas}, {"median", e.median}, {"q95", e.q95}});
    j["entries"] = std::move(entries);
    j["median_ratios"] = report.median_ratios;
    j["monotone"] = report.monotone;
    j["bound_ok"] = report.bound_ok;
    j["ratios_ok"] = report.ratios_ok;
    j["pass"] = report.pass;
    return j;
}

nlohmann::ordered_json to_json(const CltReport& report) {
    nlohmann::ordered_json j;
    j["check"] = "clt";
    j["time"] = report.time;
    j["total"] = report.total;
    j["replicas"] = report.replicas;
    j["mean"] = report.mean;
    j["empirical"] = matrix_json(report.empirical);
    j["reference"] = matrix_json(report.reference);
    j["z_scores"] = matrix_json(report.z_scores);
    j["frobenius_relative_error"] = report.frobenius_relative_error;
    j["max_abs_total"] = report.max_abs_total;
    j["degenerate"] = report.degenerate;
    j["pass"] = report.pass;
    return j;
}

nlohmann::ordered_json to_json(const MartingaleReport& report) {
    nlohmann::ordered_json j;
    j["check"] = "martingale";
    j["time"] = report.time;
    j["replicas"] = report.replicas;
    auto reactions = nlohmann::ordered_json::array();
    for (const auto& r : report.reactions)
        reactions.push_back({{"reaction", r.reaction},
                             {"mean_count", r.mean_count},
                             {"mean_internal_time", r.mean_internal_time},
                             {"compensated", check_json(r.compensated)},
                             {"quadratic_variation", check_json(r.quadratic_variation)}});
    j["reactions"] = std::move(reactions);
    auto cross = nlohmann::ordered_json::array();
    for (const auto& c : report.cross)
        cross.push_back({{"first", c.first}, {"second", c.second}, {"product", check_json(c.product)}});
    j["cross"] = std::move(cross);
    j["pass"] = report.pass;
    return j;
}

nlohmann::ordered_json to_json(const GillespieReport& report) {
    nlohmann::ordered_json j;
    j["check"] = "gillespie";
    j["samples"] = report.samples;
    j["rates"] = report.rates;
    j["total_rate"] = report.total_rate;
    j["probabilities"] = report.probabilities;
    j["frequencies"] = report.frequencies;
    j["ks_statistic"] = report.ks_statistic;
    j["ks_p"] = report.ks_p;
    j["chi2_statistic"] = report.chi2_statistic;
    j["chi2_dof"] = report.chi2_dof;
    j["chi2_p"] = report.chi2_p;
    j["pass"] = report.pass;
    return j;
}

nlohmann::ordered_json to_json(const SdeReport& report) {
    nlohmann::ordered_json j;
    j["check"] = "sde";
    j["time"] = report.time;
    j["paths"] = report.paths;
    j["empirical"] = matrix_json(report.empirical);
    j["reference"] = matrix_json(report.reference);
    j["frobenius_relative_error"] = report.frobenius_relative_error;
    j["max_total_drift"] = report.max_total_drift;
    j["pass"] = report.pass;
    return j;
}

}  // namespace cyclesim
