#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evsched/allocation.hpp"
#include "evsched/day_ahead.hpp"
#include "evsched/metrics.hpp"
#include "evsched/outputs.hpp"
#include "evsched/scenario.hpp"

// End-to-end orchestration shared by the CLI subcommands and the
// integration suites: gen -> dayahead -> simulate -> report over one
// output directory.

namespace evsched {

struct PipelineResult {
    AssembledScenario scenario;
    DayAheadSchedule schedule;
    SimulationTrace trace;
    MetricsReport report;
    bool dayahead_converged = true;
    std::vector<std::string> files; // paths relative to the output directory
};

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

} // namespace detail

inline SimOptions sim_options_from_config(const ScenarioConfig& cfg) {
    SimOptions opts;
    opts.consensus = cfg.consensus;
    opts.estimator = cfg.estimator;
    opts.init = cfg.init;
    opts.perfect_forecast = cfg.perfect_forecast;
    opts.forecast_sigma = cfg.forecast_sigma;
    opts.seed = mix_seed(cfg.seed, 0x51ACULL);
    return opts;
}

inline MetricsReport report_from_trace(const SimulationTrace& trace,
                                       const std::vector<double>& price,
                                       const std::string& label) {
    std::vector<double> base, solar, ev, target;
    for (const auto& s : trace.steps) {
        base.push_back(s.baseload_kw);
        solar.push_back(s.solar_kw);
        ev.push_back(s.ev_kw);
        target.push_back(s.target_kw);
    }
    MetricsReport r = build_report(base, solar, ev, trace.uncontrolled_ev_kw, target, price,
                                   trace.grid.step_hours);
    r.label = label;
    r.ev_count = static_cast<int>(trace.per_ev.size());
    for (const auto& e : trace.per_ev) {
        if (e.shortfall) {
            ++r.shortfall_count;
            r.shortfall_kwh += e.deliverable_kwh - e.delivered_kwh;
        }
    }
    return r;
}

/// Runs the whole two-stage chain on one scenario and writes every artifact
/// under `outdir`. A non-converged day-ahead solve is reported, not fatal:
/// the best iterate is used and `dayahead_converged` is cleared.
inline PipelineResult run_pipeline(const ScenarioConfig& cfg, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);

    PipelineResult res;
    res.scenario = assemble_scenario(cfg);
    auto& sc = res.scenario;

    const auto emit = [&](const std::string& name) {
        res.files.push_back(name);
        return detail::join_path(outdir, name);
    };

    write_timeseries_csv(emit("baseload.csv"), sc.baseload);
    write_timeseries_csv(emit("solar.csv"), sc.solar);
    write_timeseries_csv(emit("price.csv"), sc.price);
    write_sessions_csv(emit("sessions.csv"), sc.sessions);

    nlohmann::json prov;
    prov["config"] = cfg.resolved_json();
    prov["seed"] = cfg.seed;
    prov["session_count"] = sc.sessions.size();
    write_json_file(emit("gen_provenance.json"), prov);

    std::vector<long long> session_ids;
    for (const auto& s : sc.sessions) session_ids.push_back(s.id);

    try {
        res.schedule = solve_day_ahead(sc.dayahead_input(), sc.envelope, cfg.solver);
    } catch (const DayAheadError& e) {
        res.schedule = e.best_iterate;
        res.dayahead_converged = false;
    }
    write_dayahead_schedule_csv(emit("dayahead_schedule.csv"), res.schedule);
    write_json_file(emit("dayahead_summary.json"),
                    dayahead_summary_json(res.schedule, cfg.theta, cfg.grid, session_ids));

    res.trace = simulate(sc.sim, res.schedule.P_hat, sim_options_from_config(cfg));
    // setup-time repairs belong to the same event stream
    res.trace.events.events.insert(res.trace.events.events.begin(),
                                   sc.setup_events.events.begin(), sc.setup_events.events.end());
    if (!res.dayahead_converged)
        res.trace.events.add(-1, "dayahead_non_convergence", -1,
                             {{"opt_residual", res.schedule.stats.opt_residual},
                              {"feas_residual", res.schedule.stats.feas_residual}});

    write_trace_csv(emit("trace.csv"), res.trace);
    write_per_ev_csv(emit("per_ev.csv"), res.trace);
    write_timeseries_csv(emit("uncontrolled.csv"), res.trace.uncontrolled_ev_kw, "ev_kw");
    res.trace.events.write_jsonl(emit("events.jsonl"));

    res.report = report_from_trace(res.trace, sc.price,
                                   fs::path(outdir).filename().string());
    write_json_file(emit("report.json"), nlohmann::json::array({res.report.to_json()}));
    write_ramp_table_csv(emit("report_table.csv"), {res.report});

    return res;
}

/// Rebuilds a MetricsReport from the files of a finished run directory.
inline MetricsReport report_from_run_dir(const std::string& dir, const std::string& label,
                                         const std::string& price_csv_override = "") {
    const auto trace_path = detail::join_path(dir, "trace.csv");
    const auto t = read_trace_csv(trace_path);
    const int T = static_cast<int>(t.baseload.size());
    if (T < 2) throw std::runtime_error(trace_path + ": trace too short");

    // grid step length is recovered from the run's price file row count later;
    // default scenario grids carry it in dayahead_summary.json when present.
    double dt = 0.25;
    const auto summary_path = detail::join_path(dir, "dayahead_summary.json");
    if (std::filesystem::exists(summary_path)) {
        const auto j = read_json_file(summary_path);
        if (j.contains("grid") && j["grid"].contains("step_hours"))
            dt = j["grid"]["step_hours"].get<double>();
    }
    TimeGrid grid(T, dt);

    const std::string price_path =
        price_csv_override.empty() ? detail::join_path(dir, "price.csv") : price_csv_override;
    const auto price = load_timeseries_csv(price_path, "$/kWh", grid).values;
    const auto uncontrolled =
        load_timeseries_csv(detail::join_path(dir, "uncontrolled.csv"), "kW", grid).values;

    MetricsReport r = build_report(t.baseload, t.solar, t.ev, uncontrolled, t.target, price, dt);
    r.label = label.empty() ? std::filesystem::path(dir).filename().string() : label;

    const auto per_ev_path = detail::join_path(dir, "per_ev.csv");
    if (std::filesystem::exists(per_ev_path)) {
        auto table = csv::read_file(per_ev_path);
        const int c_flag = table.column("shortfall", per_ev_path);
        const int c_del = table.column("delivered_kwh", per_ev_path);
        const int c_req = table.column("required_kwh", per_ev_path);
        r.ev_count = static_cast<int>(table.rows.size());
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const std::string ctx = per_ev_path + ":row " + std::to_string(i + 2);
            if (csv::parse_int(table.rows[i][c_flag], ctx) != 0) {
                ++r.shortfall_count;
                r.shortfall_kwh += std::max(0.0, csv::parse_double(table.rows[i][c_req], ctx) -
                                                     csv::parse_double(table.rows[i][c_del], ctx));
            }
        }
    }
    return r;
}

} // namespace evsched
