#pragma once

// Validation run configuration. The file is INI-style text with three
// sections; every key is optional and defaults to the value below.
//
//   [model]     n, lambda, fractions
//   [run]       base_seed, threads, ode_step, cov_step, sde_step, grid_step
//   [validate]  checks, per-check sizes, pass thresholds
//
// Comments start with ';' or '#'. Lists are comma separated.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclesim/core.hpp"
#include "cyclesim/validate.hpp"

namespace cyclesim {

struct ValidationConfig {
    // [model]
    int n = 3;
    double lambda = 1.0;
    /// Initial shares; empty means 1/n each.
    std::vector<double> fractions;

    // [run]
    std::uint64_t base_seed = 20240601;
    unsigned threads = 0;
    double ode_step = 1e-3;
    double cov_step = 2e-3;
    double sde_step = 1e-3;
    double grid_step = 0.01;

    // [validate]
    std::vector<std::string> checks{"gillespie", "lln", "clt", "martingale", "sde"};

    double gillespie_lambda = 3.0;
    std::vector<Count> gillespie_initial{1, 1, 1};
    std::size_t gillespie_samples = 10000;

    std::vector<Count> lln_sizes{100, 400, 1600, 6400};
    std::size_t lln_replicas = 200;
    double lln_time = 2.0;
    /// Overrides `fractions` for the LLN check when set.
    std::vector<double> lln_fractions;

    Count clt_total = 10000;
    std::size_t clt_replicas = 2000;
    double clt_time = 1.0;

    Count martingale_total = 100;
    std::size_t martingale_replicas = 5000;
    double martingale_time = 1.0;

    std::size_t sde_paths = 5000;
    double sde_time = 1.0;

    ValidateConfig thresholds;

    /// Initial shares used by a check (`fractions` or 1/n each).
    std::vector<double> model_fractions() const;
};

ValidationConfig parse_validation_config(const std::string& text);
ValidationConfig load_validation_config(const std::filesystem::path& file);

nlohmann::ordered_json to_json(const ValidationConfig& config);

/// Runs the configured checks, writes report.json plus the reference
/// mean-field and covariance CSVs into `out_dir`, and returns the report.
/// The report's top-level `pass` is the conjunction of all checks.
nlohmann::ordered_json run_validation(const ValidationConfig& config, const std::filesystem::path& out_dir);

}  // namespace cyclesim
