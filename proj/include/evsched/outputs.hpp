#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsched/allocation.hpp"
#include "evsched/csv.hpp"
#include "evsched/day_ahead.hpp"
#include "evsched/metrics.hpp"
#include "evsched/time_grid.hpp"

namespace evsched {

inline const char* kVersion = "0.1.0";

// FNV-1a 64-bit over the file bytes; used for input identity in manifests.
inline std::string fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("digest: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return std::string(hex);
}

inline void write_dayahead_schedule_csv(const std::string& path, const DayAheadSchedule& s) {
    csv::Writer w(path);
    w.row({"step", "p_hat_kw"});
    for (std::size_t t = 0; t < s.P_hat.size(); ++t)
        w.row({std::to_string(t), csv::format_double(s.P_hat[t])});
    w.close();
}

inline std::vector<double> read_dayahead_schedule_csv(const std::string& path,
                                                      const TimeGrid& grid) {
    auto table = csv::read_file(path);
    const int c_step = table.column("step", path);
    const int c_p = table.column("p_hat_kw", path);
    if (table.rows.size() != static_cast<std::size_t>(grid.steps))
        throw std::runtime_error(path + ": " + std::to_string(table.rows.size()) +
                                 " rows do not match grid of " + std::to_string(grid.steps));
    std::vector<double> out(grid.steps);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string ctx = path + ":row " + std::to_string(r + 2);
        const long long step = csv::parse_int(table.rows[r][c_step], ctx);
        if (step < 0 || step >= grid.steps)
            throw std::runtime_error(ctx + ": step " + std::to_string(step) + " out of range");
        out[step] = csv::parse_double(table.rows[r][c_p], ctx);
    }
    return out;
}

inline nlohmann::json dayahead_summary_json(const DayAheadSchedule& s, double theta,
                                            const TimeGrid& grid,
                                            const std::vector<long long>& session_ids) {
    nlohmann::json j;
    j["objective_usd"] = s.objective;
    j["cost_term_usd"] = s.cost_term;
    j["ramp_term"] = s.ramp_term;
    j["theta"] = theta;
    j["grid"] = {{"steps", grid.steps}, {"step_hours", grid.step_hours}};
    j["solver"] = {{"iterations", s.stats.iterations},
                   {"feas_residual", s.stats.feas_residual},
                   {"opt_residual", s.stats.opt_residual},
                   {"converged", s.stats.converged}};
    j["session_ids"] = session_ids;
    return j;
}

inline void write_trace_csv(const std::string& path, const SimulationTrace& trace) {
    csv::Writer w(path);
    w.row({"step", "baseload_kw", "solar_kw", "ev_kw", "target_kw", "iters", "residual"});
    for (const auto& s : trace.steps)
        w.row({std::to_string(s.step), csv::format_double(s.baseload_kw),
               csv::format_double(s.solar_kw), csv::format_double(s.ev_kw),
               csv::format_double(s.target_kw), std::to_string(s.iterations),
               csv::format_double(s.residual)});
    w.close();
}

inline void write_per_ev_csv(const std::string& path, const SimulationTrace& trace) {
    csv::Writer w(path);
    w.row({"id", "arrive", "depart", "delivered_kwh", "required_kwh", "shortfall"});
    for (const auto& e : trace.per_ev)
        w.row({std::to_string(e.id), std::to_string(e.arrive), std::to_string(e.depart),
               csv::format_double(e.delivered_kwh), csv::format_double(e.required_kwh),
               e.shortfall ? "1" : "0"});
    w.close();
}

struct TraceColumns {
    std::vector<double> baseload, solar, ev, target;
    std::vector<int> iters;
    std::vector<double> residual;
};

inline TraceColumns read_trace_csv(const std::string& path) {
    auto table = csv::read_file(path);
    const int c_base = table.column("baseload_kw", path);
    const int c_solar = table.column("solar_kw", path);
    const int c_ev = table.column("ev_kw", path);
    const int c_target = table.column("target_kw", path);
    const int c_iters = table.column("iters", path);
    const int c_res = table.column("residual", path);
    TraceColumns t;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string ctx = path + ":row " + std::to_string(r + 2);
        t.baseload.push_back(csv::parse_double(table.rows[r][c_base], ctx));
        t.solar.push_back(csv::parse_double(table.rows[r][c_solar], ctx));
        t.ev.push_back(csv::parse_double(table.rows[r][c_ev], ctx));
        t.target.push_back(csv::parse_double(table.rows[r][c_target], ctx));
        t.iters.push_back(static_cast<int>(csv::parse_int(table.rows[r][c_iters], ctx)));
        t.residual.push_back(csv::parse_double(table.rows[r][c_res], ctx));
    }
    return t;
}

/// Run manifest: config snapshot, seed, input digests, emitted files and
/// wall-clock duration. The duration field is the one value that varies
/// between otherwise identical runs.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config_snapshot;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> input_digests; // path, fnv1a64
    std::vector<std::string> outputs;
    long long duration_ms = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand;
        j["config"] = config_snapshot;
        j["seed"] = seed;
        nlohmann::json digests = nlohmann::json::object();
        for (const auto& [path, digest] : input_digests) digests[path] = digest;
        j["input_digests"] = digests;
        j["outputs"] = outputs;
        j["duration_ms"] = duration_ms;
        j["version"] = kVersion;
        return j;
    }
};

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + " is not valid JSON: " + std::string(e.what()));
    }
    return j;
}

} // namespace evsched
