// Command-line front end: gen | dayahead | simulate | report | pipeline.
// Exit codes: 0 success, 1 validation/config error, 2 solver
// non-convergence (artifacts are still written).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <evsched/evsched.hpp>

namespace fs = std::filesystem;
using namespace evsched;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<long long> seed;
    std::string out_dir;
    std::optional<double> theta;
    std::optional<double> beta;
    std::optional<long long> evs;
    std::optional<bool> perfect_forecast;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "Scenario config JSON");
    cmd->add_option("--seed", f.seed, "Master seed override (wins over config)");
    cmd->add_option("--out", f.out_dir, "Output directory override");
    cmd->add_option("--theta", f.theta, "Ramp weight override");
    cmd->add_option("--beta", f.beta, "Consensus damping override");
    cmd->add_option("--evs", f.evs, "Generated fleet size override");
    cmd->add_option("--perfect-forecast", f.perfect_forecast,
                    "Copy realized profiles as real-time forecasts");
}

ScenarioConfig load_config(const CommonFlags& f) {
    ScenarioConfig cfg = f.config_path.empty() ? ScenarioConfig{} : parse_scenario(f.config_path);
    if (f.seed) {
        cfg.seed = static_cast<std::uint64_t>(*f.seed);
        cfg.gen_seed_explicit = false;     // derived seeds follow the override
        cfg.perturb_seed_explicit = false;
    }
    if (f.theta) {
        if (*f.theta < 0.0) throw std::invalid_argument("--theta must be >= 0");
        cfg.theta = *f.theta;
    }
    if (f.beta) {
        if (!(*f.beta > 0.0)) throw std::invalid_argument("--beta must be > 0");
        cfg.consensus.beta = *f.beta;
    }
    if (f.evs) {
        if (cfg.sessions_from_csv)
            throw std::invalid_argument("--evs only applies to generated sessions");
        if (*f.evs < 0) throw std::invalid_argument("--evs must be >= 0");
        cfg.gen_count = static_cast<int>(*f.evs);
    }
    if (f.perfect_forecast) cfg.perfect_forecast = *f.perfect_forecast;

    if (!f.out_dir.empty()) {
        cfg.output_dir = f.out_dir;
    } else if (const char* env = std::getenv("EVSCHED_OUT_DIR"); env && *env) {
        cfg.output_dir = env;
    }
    return cfg;
}

class ManifestScope {
public:
    ManifestScope(std::string subcommand, const ScenarioConfig& cfg)
        : start_(std::chrono::steady_clock::now()) {
        manifest_.subcommand = std::move(subcommand);
        manifest_.config_snapshot = cfg.resolved_json();
        manifest_.seed = cfg.seed;
    }

    void input(const std::string& path) {
        if (!path.empty() && fs::exists(path))
            manifest_.input_digests.emplace_back(path, fnv1a64_file(path));
    }
    void output(const std::string& name) { manifest_.outputs.push_back(name); }
    void outputs(const std::vector<std::string>& names) {
        for (const auto& n : names) manifest_.outputs.push_back(n);
    }

    void write(const std::string& dir) {
        manifest_.outputs.push_back("manifest.json");
        manifest_.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - start_)
                                    .count();
        write_json_file((fs::path(dir) / "manifest.json").string(), manifest_.to_json());
    }

private:
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

int cmd_gen(const CommonFlags& flags) {
    ScenarioConfig cfg = load_config(flags);
    ManifestScope manifest("gen", cfg);
    manifest.input(flags.config_path);
    fs::create_directories(cfg.output_dir);

    EventLog log;
    auto sessions = sample_sessions(cfg.behavior, cfg.gen_count, cfg.grid,
                                    cfg.effective_gen_seed(), &log);
    write_sessions_csv((fs::path(cfg.output_dir) / "sessions.csv").string(), sessions);
    manifest.output("sessions.csv");

    nlohmann::json prov;
    prov["config"] = cfg.resolved_json();
    prov["seed"] = cfg.seed;
    prov["generator_seed"] = cfg.effective_gen_seed();
    prov["session_count"] = sessions.size();
    prov["repair_events"] = log.events.size();
    write_json_file((fs::path(cfg.output_dir) / "gen_provenance.json").string(), prov);
    manifest.output("gen_provenance.json");

    manifest.write(cfg.output_dir);
    std::cout << "wrote " << sessions.size() << " sessions to " << cfg.output_dir << "\n";
    return 0;
}

int cmd_dayahead(CLI::App* cmd, const CommonFlags& flags, const std::string& price_csv,
                 const std::string& baseload_csv, const std::string& solar_csv,
                 const std::string& sessions_csv, long long grid_steps, double step_hours,
                 bool export_envelope) {
    ScenarioConfig cfg;
    if (!flags.config_path.empty()) {
        cfg = load_config(flags);
    } else {
        if (price_csv.empty() || baseload_csv.empty() || solar_csv.empty() || sessions_csv.empty())
            throw std::invalid_argument(
                "dayahead needs --config or all of --price/--baseload/--solar/--sessions");
        CommonFlags f = flags;
        cfg = load_config(f);
        cfg.grid = TimeGrid(static_cast<int>(grid_steps), step_hours);
    }
    if (!price_csv.empty()) cfg.price = {SeriesSpec::Kind::Csv, price_csv, "", 1.0};
    if (!baseload_csv.empty()) cfg.baseload = {SeriesSpec::Kind::Csv, baseload_csv, "", 1.0};
    if (!solar_csv.empty()) cfg.solar = {SeriesSpec::Kind::Csv, solar_csv, "", 1.0};
    if (!sessions_csv.empty()) {
        cfg.sessions_from_csv = true;
        cfg.sessions_csv = sessions_csv;
    }
    (void)cmd;

    ManifestScope manifest("dayahead", cfg);
    for (const auto& p : {flags.config_path, price_csv, baseload_csv, solar_csv, sessions_csv})
        manifest.input(p);
    fs::create_directories(cfg.output_dir);

    AssembledScenario sc = assemble_scenario(cfg);
    std::vector<long long> ids;
    for (const auto& s : sc.sessions) ids.push_back(s.id);

    DayAheadSchedule sched;
    bool converged = true;
    try {
        sched = solve_day_ahead(sc.dayahead_input(), sc.envelope, cfg.solver);
    } catch (const DayAheadError& e) {
        sched = e.best_iterate;
        converged = false;
        std::cerr << "dayahead: " << e.what() << "\n";
    }
    write_dayahead_schedule_csv((fs::path(cfg.output_dir) / "dayahead_schedule.csv").string(),
                                sched);
    manifest.output("dayahead_schedule.csv");
    write_json_file((fs::path(cfg.output_dir) / "dayahead_summary.json").string(),
                    dayahead_summary_json(sched, cfg.theta, cfg.grid, ids));
    manifest.output("dayahead_summary.json");
    if (export_envelope) {
        write_envelope_csv((fs::path(cfg.output_dir) / "envelope.csv").string(), sc.envelope);
        manifest.output("envelope.csv");
    }
    manifest.write(cfg.output_dir);
    std::cout << "objective " << sched.objective << " (cost " << sched.cost_term << ", ramp "
              << sched.ramp_term << ") in " << sched.stats.iterations << " iterations\n";
    return converged ? 0 : 2;
}

int cmd_simulate(const CommonFlags& flags, const std::string& dayahead_csv,
                 const std::string& dayahead_summary) {
    if (dayahead_csv.empty())
        throw std::invalid_argument("simulate needs --dayahead <schedule.csv>");
    ScenarioConfig cfg = load_config(flags);
    ManifestScope manifest("simulate", cfg);
    manifest.input(flags.config_path);
    manifest.input(dayahead_csv);
    manifest.input(dayahead_summary);
    fs::create_directories(cfg.output_dir);

    AssembledScenario sc = assemble_scenario(cfg);
    const auto p_hat = read_dayahead_schedule_csv(dayahead_csv, cfg.grid);
    if (!dayahead_summary.empty()) {
        const auto j = read_json_file(dayahead_summary);
        if (j.contains("grid")) {
            if (j["grid"].value("steps", cfg.grid.steps) != cfg.grid.steps ||
                j["grid"].value("step_hours", cfg.grid.step_hours) != cfg.grid.step_hours)
                throw std::invalid_argument("simulate: day-ahead summary grid differs from config");
        }
        if (j.contains("session_ids"))
            sc.sim.dayahead_session_ids = j["session_ids"].get<std::vector<long long>>();
    }

    SimulationTrace trace = simulate(sc.sim, p_hat, sim_options_from_config(cfg));
    trace.events.events.insert(trace.events.events.begin(), sc.setup_events.events.begin(),
                               sc.setup_events.events.end());

    write_trace_csv((fs::path(cfg.output_dir) / "trace.csv").string(), trace);
    write_per_ev_csv((fs::path(cfg.output_dir) / "per_ev.csv").string(), trace);
    write_timeseries_csv((fs::path(cfg.output_dir) / "uncontrolled.csv").string(),
                         trace.uncontrolled_ev_kw, "ev_kw");
    trace.events.write_jsonl((fs::path(cfg.output_dir) / "events.jsonl").string());
    manifest.outputs({"trace.csv", "per_ev.csv", "uncontrolled.csv", "events.jsonl"});
    manifest.write(cfg.output_dir);

    std::size_t nonconv = trace.events.count("non_convergence");
    std::cout << "simulated " << trace.steps.size() << " steps, " << trace.per_ev.size()
              << " sessions, " << nonconv << " non-converged steps\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& runs, const std::vector<std::string>& labels,
               const std::string& price_csv, const std::string& out_dir) {
    if (runs.empty()) throw std::invalid_argument("report needs at least one --run directory");
    ScenarioConfig pseudo;
    pseudo.output_dir = out_dir;
    ManifestScope manifest("report", pseudo);
    fs::create_directories(out_dir);

    std::vector<MetricsReport> reports;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string label = i < labels.size() ? labels[i] : "";
        reports.push_back(report_from_run_dir(runs[i], label, price_csv));
        manifest.input((fs::path(runs[i]) / "trace.csv").string());
    }
    if (!price_csv.empty()) manifest.input(price_csv);

    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : reports) arr.push_back(r.to_json());
    write_json_file((fs::path(out_dir) / "report.json").string(), arr);
    write_ramp_table_csv((fs::path(out_dir) / "report_table.csv").string(), reports);
    manifest.outputs({"report.json", "report_table.csv"});
    manifest.write(out_dir);

    std::cout << ramp_table_text(reports);
    return 0;
}

int cmd_pipeline(const CommonFlags& flags) {
    ScenarioConfig cfg = load_config(flags);
    ManifestScope manifest("pipeline", cfg);
    manifest.input(flags.config_path);

    PipelineResult res = run_pipeline(cfg, cfg.output_dir);
    manifest.outputs(res.files);
    manifest.write(cfg.output_dir);

    std::cout << ramp_table_text({res.report});
    std::cout << "total cost " << res.report.total_cost_usd << " (uncontrolled "
              << res.report.uncontrolled_cost_usd << "), tracking rmse "
              << res.report.tracking_rmse_kw << " kW\n";
    return res.dayahead_converged ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage EV charging management: day-ahead scheduling and "
                 "decentralized real-time allocation"};
    app.require_subcommand(1);

    CommonFlags gen_flags, da_flags, sim_flags, pipe_flags;

    auto* gen = app.add_subcommand("gen", "Generate synthetic charging sessions");
    add_common_flags(gen, gen_flags);

    auto* dayahead = app.add_subcommand("dayahead", "Solve the first-stage schedule");
    add_common_flags(dayahead, da_flags);
    std::string da_price, da_baseload, da_solar, da_sessions;
    long long da_steps = 96;
    double da_step_hours = 0.25;
    bool da_envelope = false;
    dayahead->add_option("--price", da_price, "Price CSV (step,value or timestamp,value)");
    dayahead->add_option("--baseload", da_baseload, "Baseload CSV");
    dayahead->add_option("--solar", da_solar, "Solar CSV");
    dayahead->add_option("--sessions", da_sessions, "Sessions CSV");
    dayahead->add_option("--grid-steps", da_steps, "Grid steps when no config is given");
    dayahead->add_option("--step-hours", da_step_hours, "Step length in hours");
    dayahead->add_flag("--export-envelope", da_envelope, "Also write the aggregate envelope CSV");

    auto* simulate_cmd = app.add_subcommand("simulate", "Run the real-time allocation stage");
    add_common_flags(simulate_cmd, sim_flags);
    std::string sim_dayahead, sim_summary;
    simulate_cmd->add_option("--dayahead", sim_dayahead, "Day-ahead schedule CSV (required)");
    simulate_cmd->add_option("--dayahead-summary", sim_summary,
                             "Day-ahead summary JSON (grid check, late-arrival detection)");

    auto* report = app.add_subcommand("report", "Aggregate metrics over finished runs");
    std::vector<std::string> rep_runs, rep_labels;
    std::string rep_price, rep_out = "report_out";
    report->add_option("--run", rep_runs, "Run directory (repeatable)");
    report->add_option("--label", rep_labels, "Column label per run (repeatable)");
    report->add_option("--price", rep_price, "Price CSV override");
    report->add_option("--out", rep_out, "Report output directory");

    auto* pipeline = app.add_subcommand("pipeline", "gen -> dayahead -> simulate -> report");
    add_common_flags(pipeline, pipe_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_flags);
        if (dayahead->parsed())
            return cmd_dayahead(dayahead, da_flags, da_price, da_baseload, da_solar, da_sessions,
                                da_steps, da_step_hours, da_envelope);
        if (simulate_cmd->parsed()) return cmd_simulate(sim_flags, sim_dayahead, sim_summary);
        if (report->parsed()) return cmd_report(rep_runs, rep_labels, rep_price, rep_out);
        if (pipeline->parsed()) return cmd_pipeline(pipe_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
