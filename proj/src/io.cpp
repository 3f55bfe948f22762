#include "cyclesim/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace cyclesim {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

template <typename T>
T parse_number(std::string_view field) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\t'))
        field.remove_suffix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw DomainError(fmt::format("cannot parse number '{}'", field));
    return value;
}

std::string species_header(const char* prefix, int n) {
    std::string header;
    for (int i = 1; i <= n; ++i) header += fmt::format(",{}_{}", prefix, i);
    return header;
}

std::ifstream open_input(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw DomainError(fmt::format("cannot open {}", file.string()));
    return in;
}

std::ofstream open_output(const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DomainError(fmt::format("cannot write {}", file.string()));
    return out;
}

fs::path events_file(const fs::path& dir, std::size_t replica) {
    return dir / "events" / fmt::format("replica_{}.csv", replica);
}

ordered_json optional_real(std::optional<double> x) { return x ? ordered_json(*x) : ordered_json(nullptr); }

}  // namespace

std::string format_real(double x) { return fmt::format("{:.17g}", x); }

void write_samples_csv(std::ostream& out, const Ensemble& ensemble) {
    out << "replica,time" << species_header("X", ensemble.spec.n) << '\n';
    for (std::size_t r = 0; r < ensemble.trajectories.size(); ++r) {
        const Trajectory& traj = ensemble.trajectories[r];
        for (std::size_t g = 0; g < traj.samples.size(); ++g) {
            out << r << ',' << format_real(traj.grid[g]);
            for (Count x : traj.samples[g]) out << ',' << x;
            out << '\n';
        }
    }
}

void write_events_csv(std::ostream& out, const Trajectory& trajectory) {
    out << "time,reaction" << species_header("X", trajectory.spec.n) << '\n';
    for (const JumpEvent& ev : trajectory.events) {
        out << format_real(ev.time) << ',' << ev.reaction + 1;
        for (Count x : ev.counts_after) out << ',' << x;
        out << '\n';
    }
}

ordered_json manifest_json(const Ensemble& ensemble, bool events_written) {
    const ModelSpec& spec = ensemble.spec;
    ordered_json j;
    j["format"] = "cyclesim-ensemble";
    j["version"] = 1;
    std::vector<std::string> columns{"replica", "time"};
    for (int i = 1; i <= spec.n; ++i) columns.push_back(fmt::format("X_{}", i));
    j["columns"] = columns;
    j["spec"] = {{"n", spec.n}, {"lambda", spec.lambda}, {"total", spec.total}, {"initial", spec.initial}};
    j["base_seed"] = ensemble.base_seed;
    j["replicas"] = ensemble.trajectories.size();
    j["t_end"] = std::isfinite(ensemble.t_end) ? ordered_json(ensemble.t_end) : ordered_json(nullptr);
    j["grid"] = ensemble.grid;
    j["events_written"] = events_written;

    std::size_t absorbed = 0;
    double absorbed_time_sum = 0.0;
    auto records = ordered_json::array();
    for (std::size_t r = 0; r < ensemble.trajectories.size(); ++r) {
        const Trajectory& traj = ensemble.trajectories[r];
        if (traj.absorbed) {
            ++absorbed;
            absorbed_time_sum += *traj.absorbed;
        }
        records.push_back({{"replica", r},
                           {"seed", traj.seed},
                           {"absorbed", optional_real(traj.absorbed)},
                           {"events_retained", traj.events_retained},
                           {"event_count", traj.events.size()},
                           {"end_time", traj.end_time},
                           {"final_counts", traj.final_counts},
                           {"final_internal_time", traj.final_internal_time},
                           {"final_event_count", traj.final_event_count}});
    }
    const double replicas = static_cast<double>(ensemble.trajectories.size());
    j["absorption"] = {
        {"count", absorbed},
        {"fraction", replicas > 0 ? static_cast<double>(absorbed) / replicas : 0.0},
        {"mean_time", absorbed ? ordered_json(absorbed_time_sum / static_cast<double>(absorbed)) : ordered_json(nullptr)}};
    j["trajectories"] = std::move(records);
    return j;
}

void write_ensemble(const Ensemble& ensemble, const fs::path& dir, bool events) {
    fs::create_directories(dir);
    {
        auto out = open_output(dir / "trajectories.csv");
        write_samples_csv(out, ensemble);
    }
    write_json(dir / "manifest.json", manifest_json(ensemble, events));
    if (!events) return;
    fs::create_directories(dir / "events");
    for (std::size_t r = 0; r < ensemble.trajectories.size(); ++r) {
        const Trajectory& traj = ensemble.trajectories[r];
        if (!traj.events_retained) continue;
        auto out = open_output(events_file(dir, r));
        write_events_csv(out, traj);
    }
}

Ensemble read_ensemble(const fs::path& dir) {
    const ordered_json manifest = ordered_json::parse(open_input(dir / "manifest.json"));
    if (manifest.value("format", "") != "cyclesim-ensemble")
        throw DomainError(fmt::format("{} is not an ensemble manifest", (dir / "manifest.json").string()));

    Ensemble ensemble;
    const auto& s = manifest.at("spec");
    ensemble.spec = ModelSpec{s.at("n").get<int>(), s.at("lambda").get<double>(), s.at("total").get<Count>(),
                              s.at("initial").get<std::vector<Count>>()};
    ensemble.base_seed = manifest.at("base_seed").get<std::uint64_t>();
    ensemble.t_end = manifest.at("t_end").is_null() ? std::numeric_limits<double>::infinity()
                                                    : manifest.at("t_end").get<double>();
    ensemble.grid = manifest.at("grid").get<std::vector<double>>();
    const bool events_written = manifest.at("events_written").get<bool>();

    const auto& records = manifest.at("trajectories");
    ensemble.trajectories.resize(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        Trajectory& traj = ensemble.trajectories[r];
        traj.spec = ensemble.spec;
        traj.seed = rec.at("seed").get<std::uint64_t>();
        if (!rec.at("absorbed").is_null()) traj.absorbed = rec.at("absorbed").get<double>();
        traj.events_retained = events_written && rec.at("events_retained").get<bool>();
        traj.grid = ensemble.grid;
        traj.end_time = rec.at("end_time").get<double>();
        traj.final_counts = rec.at("final_counts").get<std::vector<Count>>();
        traj.final_internal_time = rec.at("final_internal_time").get<std::vector<double>>();
        traj.final_event_count = rec.at("final_event_count").get<std::vector<Count>>();
        traj.samples.reserve(ensemble.grid.size());
    }

    const auto n = static_cast<std::size_t>(ensemble.spec.n);
    auto in = open_input(dir / "trajectories.csv");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != n + 2) throw DomainError(fmt::format("bad trajectory row '{}'", line));
        const auto r = parse_number<std::size_t>(fields[0]);
        if (r >= ensemble.trajectories.size()) throw DomainError(fmt::format("replica {} not in manifest", r));
        Trajectory& traj = ensemble.trajectories[r];
        const double t = parse_number<double>(fields[1]);
        if (traj.samples.size() >= traj.grid.size() || traj.grid[traj.samples.size()] != t)
            throw GridMismatch(fmt::format("replica {}: sample time {} is off the grid", r, t));
        std::vector<Count> counts(n);
        for (std::size_t i = 0; i < n; ++i) counts[i] = parse_number<Count>(fields[i + 2]);
        traj.samples.push_back(std::move(counts));
    }

    for (std::size_t r = 0; r < ensemble.trajectories.size(); ++r) {
        Trajectory& traj = ensemble.trajectories[r];
        if (traj.samples.size() != traj.grid.size())
            throw GridMismatch(fmt::format("replica {}: {} samples for {} grid times", r, traj.samples.size(),
                                           traj.grid.size()));
        if (!traj.events_retained) continue;
        auto ev_in = open_input(events_file(dir, r));
        std::getline(ev_in, line);
        while (std::getline(ev_in, line)) {
            if (line.empty()) continue;
            const auto fields = split(line);
            if (fields.size() != n + 2) throw DomainError(fmt::format("bad event row '{}'", line));
            JumpEvent ev;
            ev.time = parse_number<double>(fields[0]);
            ev.reaction = parse_number<int>(fields[1]) - 1;
            ev.counts_after.resize(n);
            for (std::size_t i = 0; i < n; ++i) ev.counts_after[i] = parse_number<Count>(fields[i + 2]);
            traj.events.push_back(std::move(ev));
        }
    }
    return ensemble;
}

void write_meanfield_csv(std::ostream& out, const MeanFieldPath& path) {
    const int n = path.states.empty() ? 0 : static_cast<int>(path.states.front().u.size());
    out << "time" << species_header("u", n) << ",sum,product\n";
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        out << format_real(path.grid[k]);
        for (double x : path.states[k].u) out << ',' << format_real(x);
        out << ',' << format_real(path.invariant_audit[k].sum) << ',' << format_real(path.invariant_audit[k].product)
            << '\n';
    }
}

void write_covariance_csv(std::ostream& out, const std::vector<CovarianceState>& states) {
    const Eigen::Index n = states.empty() ? 0 : states.front().sigma.rows();
    out << "time";
    for (Eigen::Index i = 1; i <= n; ++i)
        for (Eigen::Index j = 1; j <= n; ++j) out << fmt::format(",s_{}_{}", i, j);
    out << '\n';
    for (const auto& s : states) {
        out << format_real(s.time);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_real(s.sigma(i, j));
        out << '\n';
    }
}

void write_limit_paths_csv(std::ostream& out, const std::vector<GaussianPath>& paths) {
    const int n = paths.empty() || paths.front().values.empty() ? 0 : static_cast<int>(paths.front().values[0].size());
    out << "replica,time" << species_header("V", n) << '\n';
    for (std::size_t r = 0; r < paths.size(); ++r) {
        for (std::size_t g = 0; g < paths[r].values.size(); ++g) {
            out << r << ',' << format_real(paths[r].grid[g]);
            for (double v : paths[r].values[g]) out << ',' << format_real(v);
            out << '\n';
        }
    }
}

void write_json(const fs::path& file, const ordered_json& value) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    auto out = open_output(file);
    out << value.dump(2) << '\n';
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> values;
    if (text.find_first_not_of(" \t") == std::string::npos) return values;
    for (auto field : split(text)) values.push_back(parse_number<double>(field));
    return values;
}

}  // namespace cyclesim
