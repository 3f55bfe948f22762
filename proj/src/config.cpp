#include "cyclesim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "cyclesim/io.hpp"

namespace cyclesim {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        boost::algorithm::trim(item);
        if (!item.empty()) words.push_back(item);
    }
    return words;
}

std::vector<Count> parse_count_list(const std::string& text) {
    std::vector<Count> values;
    for (const auto& w : split_words(text)) {
        std::size_t used = 0;
        const long long v = std::stoll(w, &used);
        if (used != w.size()) throw DomainError(fmt::format("'{}' is not an integer", w));
        values.push_back(v);
    }
    return values;
}

class Section {
public:
    Section(const pt::ptree& root, std::string name, std::set<std::string> known)
        : name_(std::move(name)), known_(std::move(known)) {
        if (const auto child = root.get_child_optional(name_)) tree_ = *child;
        for (const auto& [key, value] : tree_) {
            if (!value.empty()) throw DomainError(fmt::format("[{}] {}: nested keys are not supported", name_, key));
            if (!known_.contains(key)) throw DomainError(fmt::format("[{}] unknown key '{}'", name_, key));
        }
    }

    template <typename T>
    void read(const std::string& key, T& target) const {
        const auto raw = tree_.get_optional<std::string>(key);
        if (!raw) return;
        try {
            target = convert<T>(*raw);
        } catch (const std::exception& e) {
            throw DomainError(fmt::format("[{}] {} = '{}': {}", name_, key, *raw, e.what()));
        }
    }

private:
    template <typename T>
    static T convert(const std::string& raw) {
        if constexpr (std::is_same_v<T, std::vector<double>>) {
            return parse_real_list(raw);
        } else if constexpr (std::is_same_v<T, std::vector<Count>>) {
            return parse_count_list(raw);
        } else if constexpr (std::is_same_v<T, std::vector<std::string>>) {
            return split_words(raw);
        } else {
            std::istringstream in(raw);
            T value{};
            in >> value;
            if (in.fail() || !(in >> std::ws).eof()) throw DomainError("malformed value");
            return value;
        }
    }

    std::string name_;
    std::set<std::string> known_;
    pt::ptree tree_;
};

std::vector<double> fractions_from_counts(const std::vector<Count>& counts, Count total) {
    std::vector<double> u;
    for (Count x : counts) u.push_back(static_cast<double>(x) / static_cast<double>(total));
    return u;
}

// Sample grid of multiples of `step` covering [0, t].
std::vector<double> step_grid(double t, double step) {
    const auto points = static_cast<std::size_t>(std::llround(t / step)) + 1;
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k) grid[k] = static_cast<double>(k) * step;
    grid.back() = t;
    return grid;
}

ModelSpec spec_for(const ValidationConfig& config, const std::vector<double>& fractions, Count total) {
    return validate_spec(ModelSpec{config.n, config.lambda, total, counts_from_fractions(fractions, total)});
}

void write_csv(const fs::path& file, const auto& writer) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DomainError(fmt::format("cannot write {}", file.string()));
    writer(out);
}

}  // namespace

std::vector<double> ValidationConfig::model_fractions() const {
    if (!fractions.empty()) return fractions;
    return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
}

ValidationConfig parse_validation_config(const std::string& text) {
    pt::ptree root;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, root);
    } catch (const pt::ini_parser_error& e) {
        throw DomainError(fmt::format("config: {}", e.what()));
    }
    for (const auto& [name, child] : root) {
        if (child.empty() && !child.data().empty()) throw DomainError(fmt::format("config key '{}' outside a section", name));
        if (name != "model" && name != "run" && name != "validate")
            throw DomainError(fmt::format("unknown config section [{}]", name));
    }

    ValidationConfig c;
    const Section model(root, "model", {"n", "lambda", "fractions"});
    model.read("n", c.n);
    model.read("lambda", c.lambda);
    model.read("fractions", c.fractions);

    const Section run(root, "run", {"base_seed", "threads", "ode_step", "cov_step", "sde_step", "grid_step"});
    run.read("base_seed", c.base_seed);
    run.read("threads", c.threads);
    run.read("ode_step", c.ode_step);
    run.read("cov_step", c.cov_step);
    run.read("sde_step", c.sde_step);
    run.read("grid_step", c.grid_step);

    const Section v(root, "validate",
                    {"checks", "gillespie_lambda", "gillespie_initial", "gillespie_samples", "lln_sizes",
                     "lln_replicas", "lln_time", "lln_fractions", "clt_total", "clt_replicas", "clt_time",
                     "martingale_total", "martingale_replicas", "martingale_time", "sde_paths", "sde_time",
                     "lln_median_bound", "lln_ratio_min", "lln_ratio_max", "clt_frobenius_tol", "clt_min_replicas",
                     "martingale_z", "p_threshold", "sde_frobenius_tol"});
    v.read("checks", c.checks);
    v.read("gillespie_lambda", c.gillespie_lambda);
    v.read("gillespie_initial", c.gillespie_initial);
    v.read("gillespie_samples", c.gillespie_samples);
    v.read("lln_sizes", c.lln_sizes);
    v.read("lln_replicas", c.lln_replicas);
    v.read("lln_time", c.lln_time);
    v.read("lln_fractions", c.lln_fractions);
    v.read("clt_total", c.clt_total);
    v.read("clt_replicas", c.clt_replicas);
    v.read("clt_time", c.clt_time);
    v.read("martingale_total", c.martingale_total);
    v.read("martingale_replicas", c.martingale_replicas);
    v.read("martingale_time", c.martingale_time);
    v.read("sde_paths", c.sde_paths);
    v.read("sde_time", c.sde_time);
    v.read("lln_median_bound", c.thresholds.lln_median_bound);
    v.read("lln_ratio_min", c.thresholds.lln_ratio_min);
    v.read("lln_ratio_max", c.thresholds.lln_ratio_max);
    v.read("clt_frobenius_tol", c.thresholds.clt_frobenius_tol);
    v.read("clt_min_replicas", c.thresholds.clt_min_replicas);
    v.read("martingale_z", c.thresholds.martingale_z);
    v.read("p_threshold", c.thresholds.p_threshold);
    v.read("sde_frobenius_tol", c.thresholds.sde_frobenius_tol);

    static const std::set<std::string> known_checks{"gillespie", "lln", "clt", "martingale", "sde"};
    for (const auto& check : c.checks)
        if (!known_checks.contains(check)) throw DomainError(fmt::format("unknown check '{}'", check));
    if (c.n < 3) throw DomainError(fmt::format("[model] n must be >= 3, got {}", c.n));
    if (!c.fractions.empty() && c.fractions.size() != static_cast<std::size_t>(c.n))
        throw DomainError("[model] fractions must have n entries");
    if (!c.lln_fractions.empty() && c.lln_fractions.size() != static_cast<std::size_t>(c.n))
        throw DomainError("[validate] lln_fractions must have n entries");
    if (!std::is_sorted(c.lln_sizes.begin(), c.lln_sizes.end()))
        throw DomainError("[validate] lln_sizes must be increasing");
    return c;
}

ValidationConfig load_validation_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DomainError(fmt::format("cannot open config {}", file.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_validation_config(buffer.str());
}

ordered_json to_json(const ValidationConfig& c) {
    return {{"model", {{"n", c.n}, {"lambda", c.lambda}, {"fractions", c.model_fractions()}}},
            {"run",
             {{"base_seed", c.base_seed},
              {"ode_step", c.ode_step},
              {"cov_step", c.cov_step},
              {"sde_step", c.sde_step},
              {"grid_step", c.grid_step}}},
            {"validate",
             {{"checks", c.checks},
              {"gillespie_lambda", c.gillespie_lambda},
              {"gillespie_initial", c.gillespie_initial},
              {"gillespie_samples", c.gillespie_samples},
              {"lln_sizes", c.lln_sizes},
              {"lln_replicas", c.lln_replicas},
              {"lln_time", c.lln_time},
              {"lln_fractions", c.lln_fractions.empty() ? c.model_fractions() : c.lln_fractions},
              {"clt_total", c.clt_total},
              {"clt_replicas", c.clt_replicas},
              {"clt_time", c.clt_time},
              {"martingale_total", c.martingale_total},
              {"martingale_replicas", c.martingale_replicas},
              {"martingale_time", c.martingale_time},
              {"sde_paths", c.sde_paths},
              {"sde_time", c.sde_time}}},
            {"thresholds",
             {{"lln_median_bound", c.thresholds.lln_median_bound},
              {"lln_ratio_min", c.thresholds.lln_ratio_min},
              {"lln_ratio_max", c.thresholds.lln_ratio_max},
              {"clt_frobenius_tol", c.thresholds.clt_frobenius_tol},
              {"clt_min_replicas", c.thresholds.clt_min_replicas},
              {"martingale_z", c.thresholds.martingale_z},
              {"p_threshold", c.thresholds.p_threshold},
              {"sde_frobenius_tol", c.thresholds.sde_frobenius_tol}}}};
}

ordered_json run_validation(const ValidationConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    RunOptions options;
    options.threads = config.threads;
    const auto wants = [&](const char* check) {
        return std::find(config.checks.begin(), config.checks.end(), check) != config.checks.end();
    };

    ordered_json report;
    report["config"] = to_json(config);
    report["checks"] = ordered_json::array();
    bool pass = true;
    auto add = [&](ordered_json check) {
        pass = pass && check.at("pass").get<bool>();
        report["checks"].push_back(std::move(check));
    };

    if (wants("gillespie")) {
        const Count total = std::accumulate(config.gillespie_initial.begin(), config.gillespie_initial.end(), Count{0});
        const ModelSpec spec{static_cast<int>(config.gillespie_initial.size()), config.gillespie_lambda, total,
                             config.gillespie_initial};
        add(to_json(gillespie_equivalence_test(spec, config.gillespie_samples, config.base_seed, config.thresholds)));
    }

    if (wants("lln")) {
        const auto fractions = config.lln_fractions.empty() ? config.model_fractions() : config.lln_fractions;
        const auto grid = step_grid(config.lln_time, config.grid_step);
        const auto path = integrate(fractions, config.lambda, config.lln_time, config.ode_step, grid);
        write_csv(out_dir / "lln_meanfield.csv", [&](std::ostream& out) { write_meanfield_csv(out, path); });
        std::vector<Ensemble> ensembles;
        options.event_log = EventLog::Drop;
        for (std::size_t k = 0; k < config.lln_sizes.size(); ++k)
            ensembles.push_back(run_ensemble(spec_for(config, fractions, config.lln_sizes[k]), config.lln_replicas,
                                             config.lln_time, grid, config.base_seed + 1 + k, options));
        add(to_json(lln_test(ensembles, path, config.lln_time, config.thresholds)));
    }

    if (wants("clt")) {
        const ModelSpec spec = spec_for(config, config.model_fractions(), config.clt_total);
        const auto u0 = fractions_from_counts(spec.initial, spec.total);
        const std::vector<double> grid{0.0, config.clt_time};
        const auto model = make_fluctuation_model(u0, config.lambda, config.clt_time, config.ode_step, grid);
        const auto covariance = propagate_covariance(model, Matrix::Zero(config.n, config.n), config.cov_step);
        write_csv(out_dir / "clt_covariance.csv", [&](std::ostream& out) { write_covariance_csv(out, covariance); });
        options.event_log = EventLog::Drop;
        const Ensemble ensemble = run_ensemble(spec, config.clt_replicas, config.clt_time, grid,
                                               config.base_seed + 100, options);
        add(to_json(clt_test(ensemble, model.path, covariance.back(), config.thresholds)));
    }

    if (wants("martingale")) {
        const ModelSpec spec = spec_for(config, config.model_fractions(), config.martingale_total);
        options.event_log = EventLog::Keep;
        const Ensemble ensemble = run_ensemble(spec, config.martingale_replicas, config.martingale_time, {},
                                               config.base_seed + 200, options);
        add(to_json(martingale_test(ensemble, config.martingale_time, config.thresholds)));
    }

    if (wants("sde")) {
        const std::vector<double> grid{0.0, config.sde_time};
        const auto model =
            make_fluctuation_model(config.model_fractions(), config.lambda, config.sde_time, config.ode_step, grid);
        const auto covariance = propagate_covariance(model, Matrix::Zero(config.n, config.n), config.cov_step);
        write_csv(out_dir / "sde_covariance.csv", [&](std::ostream& out) { write_covariance_csv(out, covariance); });
        const auto paths = simulate_limit_sde_ensemble(model, InitialLaw::zero(config.n), config.sde_step,
                                                       config.sde_paths, config.base_seed + 300);
        add(to_json(sde_consistency_test(paths, covariance.back(), config.thresholds)));
    }

    report["pass"] = pass;
    write_json(out_dir / "report.json", report);
    return report;
}

}  // namespace cyclesim
