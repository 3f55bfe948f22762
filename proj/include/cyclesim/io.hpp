#pragma once

// File formats. All reals are written with 17 significant digits so that
// reading them back reproduces the same doubles. Species columns are
// 1-based (X_1..X_n), as is the `reaction` column of event files, where
// reaction j means species j converted an individual of species j+1.
//
//   trajectories.csv   replica,time,X_1,...,X_n        one row per grid sample
//   events/replica_<i>.csv  time,reaction,X_1,...,X_n  state after each jump
//   manifest.json      spec, seeds, grid, absorption statistics, final clocks
//   meanfield.csv      time,u_1,...,u_n,sum,product
//   covariance.csv     time,s_1_1,s_1_2,...,s_n_n      row-major
//   limit_paths.csv    replica,time,V_1,...,V_n

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cyclesim/fluctuation.hpp"
#include "cyclesim/meanfield.hpp"
#include "cyclesim/simulate.hpp"

namespace cyclesim {

std::string format_real(double x);

void write_samples_csv(std::ostream& out, const Ensemble& ensemble);
void write_events_csv(std::ostream& out, const Trajectory& trajectory);
nlohmann::ordered_json manifest_json(const Ensemble& ensemble, bool events_written);

/// Writes trajectories.csv and manifest.json into `dir` (created if
/// missing), plus one event file per replica when `events` is set.
void write_ensemble(const Ensemble& ensemble, const std::filesystem::path& dir, bool events);

/// Inverse of write_ensemble. Event logs are restored only if they were
/// written.
Ensemble read_ensemble(const std::filesystem::path& dir);

void write_meanfield_csv(std::ostream& out, const MeanFieldPath& path);
void write_covariance_csv(std::ostream& out, const std::vector<CovarianceState>& states);
void write_limit_paths_csv(std::ostream& out, const std::vector<GaussianPath>& paths);

void write_json(const std::filesystem::path& file, const nlohmann::ordered_json& value);

/// Parses "a,b,c" into reals.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace cyclesim
