// Command-line front end: simulate, meanfield, fluctuation, validate.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cyclesim/config.hpp"
#include "cyclesim/fluctuation.hpp"
#include "cyclesim/io.hpp"
#include "cyclesim/meanfield.hpp"
#include "cyclesim/simulate.hpp"

namespace fs = std::filesystem;
using namespace cyclesim;

namespace {

std::ofstream open_output(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DomainError(fmt::format("cannot write {}", file.string()));
    return out;
}

struct SimulateArgs {
    int n = 3;
    double lambda = 1.0;
    Count total = 0;
    std::string initial;
    std::size_t replicas = 1;
    double t_end = 1.0;
    std::size_t grid_points = 101;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    bool events = false;
    std::string out = "ensemble";
};

int run_simulate(const SimulateArgs& a) {
    ModelSpec spec{a.n, a.lambda, a.total, {}};
    if (a.initial.empty()) {
        spec.initial = counts_from_fractions(std::vector<double>(static_cast<std::size_t>(a.n), 1.0 / a.n), a.total);
    } else {
        for (double x : parse_real_list(a.initial)) {
            if (x != std::floor(x)) throw DomainError(fmt::format("--initial takes integer counts, got {}", x));
            spec.initial.push_back(static_cast<Count>(x));
        }
        spec.n = static_cast<int>(spec.initial.size());
        if (spec.total == 0)
            for (Count x : spec.initial) spec.total += x;
    }
    spec = validate_spec(spec);

    RunOptions options;
    options.threads = a.threads;
    options.event_log = a.events ? EventLog::Keep : EventLog::Drop;
    const auto grid = uniform_grid(a.t_end, a.grid_points);
    const Ensemble ensemble = run_ensemble(spec, a.replicas, a.t_end, grid, a.seed, options);
    write_ensemble(ensemble, a.out, a.events);

    std::size_t absorbed = 0;
    for (const auto& traj : ensemble.trajectories) absorbed += traj.absorbed.has_value();
    fmt::print("{} replicas written to {} ({} absorbed)\n", a.replicas, a.out, absorbed);
    return 0;
}

struct MeanFieldArgs {
    std::string u0;
    double lambda = 1.0;
    double t_end = 1.0;
    double step = 1e-3;
    std::size_t grid_points = 101;
    std::string out = "meanfield.csv";
};

int run_meanfield(const MeanFieldArgs& a) {
    const auto u0 = parse_real_list(a.u0);
    const auto path = integrate(u0, a.lambda, a.t_end, a.step, uniform_grid(a.t_end, a.grid_points));
    auto out = open_output(a.out);
    write_meanfield_csv(out, path);
    if (path.warned_near_boundary)
        fmt::print(stderr, "warning: path came within 1e-4 of the boundary (min component {:.3g})\n",
                   path.min_component);
    return 0;
}

struct FluctuationArgs {
    std::string u0;
    double lambda = 1.0;
    double t_end = 1.0;
    double step = 2e-3;
    std::string sigma0;
    std::size_t paths = 0;
    std::size_t grid_points = 11;
    std::uint64_t seed = 1;
    std::string out = "fluctuation";
};

int run_fluctuation(const FluctuationArgs& a) {
    const auto u0 = parse_real_list(a.u0);
    const auto n = static_cast<Eigen::Index>(u0.size());
    Matrix sigma0 = Matrix::Zero(n, n);
    const auto entries = parse_real_list(a.sigma0);
    if (!entries.empty()) {
        if (entries.size() != static_cast<std::size_t>(n * n))
            throw DomainError(fmt::format("--sigma0 needs {} entries (row-major), got {}", n * n, entries.size()));
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) sigma0(i, j) = entries[static_cast<std::size_t>(i * n + j)];
    }

    // The mean field is integrated at half the step so the covariance RK4
    // midpoints fall on integrator nodes.
    const auto model = make_fluctuation_model(u0, a.lambda, a.t_end, a.step / 2, uniform_grid(a.t_end, a.grid_points));
    const fs::path dir(a.out);
    fs::create_directories(dir);
    {
        auto out = open_output(dir / "covariance.csv");
        write_covariance_csv(out, propagate_covariance(model, sigma0, a.step));
    }
    if (a.paths > 0) {
        InitialLaw law = InitialLaw::zero(static_cast<int>(n));
        if (!sigma0.isZero(0.0)) law.covariance = sigma0;
        auto out = open_output(dir / "limit_paths.csv");
        write_limit_paths_csv(out, simulate_limit_sde_ensemble(model, law, a.step, a.paths, a.seed));
    }
    return 0;
}

int run_validate(const std::string& config_file, const std::string& out_dir) {
    const ValidationConfig config = config_file.empty() ? ValidationConfig{} : load_validation_config(config_file);
    const auto report = run_validation(config, out_dir);
    for (const auto& check : report.at("checks"))
        fmt::print("{:<11} {}\n", check.at("check").get<std::string>(), check.at("pass").get<bool>() ? "pass" : "FAIL");
    fmt::print("report written to {}\n", (fs::path(out_dir) / "report.json").string());
    return report.at("pass").get<bool>() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cyclic competition: exact simulation, mean-field limit, Gaussian fluctuations"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Run an ensemble of exact trajectories");
    simulate->add_option("--n", sim.n, "Number of species")->capture_default_str();
    simulate->add_option("--lambda", sim.lambda, "Rate constant")->capture_default_str();
    simulate->add_option("--total", sim.total, "Population size M (0: sum of --initial)")->capture_default_str();
    simulate->add_option("--initial", sim.initial, "Initial counts, comma separated (default: M split evenly)");
    simulate->add_option("--replicas", sim.replicas, "Number of replicas")->capture_default_str();
    simulate->add_option("--t-end", sim.t_end, "Final time")->capture_default_str();
    simulate->add_option("--grid-points", sim.grid_points, "Sample times from 0 to t_end")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
    simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores)")->capture_default_str();
    simulate->add_flag("--events", sim.events, "Also write every jump per replica");
    simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

    MeanFieldArgs mf;
    auto* meanfield = app.add_subcommand("meanfield", "Integrate the deterministic limit");
    meanfield->add_option("--u0", mf.u0, "Initial shares, comma separated")->required();
    meanfield->add_option("--lambda", mf.lambda, "Rate constant")->capture_default_str();
    meanfield->add_option("--t-end", mf.t_end, "Final time")->capture_default_str();
    meanfield->add_option("--step", mf.step, "RK4 step")->capture_default_str();
    meanfield->add_option("--grid-points", mf.grid_points, "Output times from 0 to t_end")->capture_default_str();
    meanfield->add_option("--out", mf.out, "Output CSV")->capture_default_str();

    FluctuationArgs fl;
    auto* fluctuation = app.add_subcommand("fluctuation", "Covariance and sample paths of the Gaussian limit");
    fluctuation->add_option("--u0", fl.u0, "Initial shares, comma separated")->required();
    fluctuation->add_option("--lambda", fl.lambda, "Rate constant")->capture_default_str();
    fluctuation->add_option("--t-end", fl.t_end, "Final time")->capture_default_str();
    fluctuation->add_option("--step", fl.step, "Covariance and Euler-Maruyama step")->capture_default_str();
    fluctuation->add_option("--sigma0", fl.sigma0, "Initial covariance, n*n entries row-major (default 0)");
    fluctuation->add_option("--paths", fl.paths, "Number of limit paths to sample")->capture_default_str();
    fluctuation->add_option("--grid-points", fl.grid_points, "Output times from 0 to t_end")->capture_default_str();
    fluctuation->add_option("--seed", fl.seed, "Base seed for the paths")->capture_default_str();
    fluctuation->add_option("--out", fl.out, "Output directory")->capture_default_str();

    std::string config_file;
    std::string validate_out = "validation";
    auto* validate = app.add_subcommand("validate", "Run the statistical checks described by a config file");
    validate->add_option("--config", config_file, "INI config (defaults used when omitted)");
    validate->add_option("--out", validate_out, "Output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return run_simulate(sim);
        if (*meanfield) return run_meanfield(mf);
        if (*fluctuation) return run_fluctuation(fl);
        if (*validate) return run_validate(config_file, validate_out);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 0;
}
