#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsched/allocation.hpp"
#include "evsched/behavior.hpp"
#include "evsched/csv.hpp"
#include "evsched/day_ahead.hpp"
#include "evsched/envelope.hpp"
#include "evsched/session.hpp"
#include "evsched/time_grid.hpp"

namespace evsched {

struct Timeseries {
    std::vector<double> values;
    std::string unit;

    void validate(const TimeGrid& grid, const std::string& what) const {
        if (values.size() != static_cast<std::size_t>(grid.steps))
            throw std::invalid_argument(what + ": length " + std::to_string(values.size()) +
                                        " does not match grid of " + std::to_string(grid.steps));
        for (std::size_t t = 0; t < values.size(); ++t)
            if (!std::isfinite(values[t]))
                throw std::invalid_argument(what + ": non-finite value at step " +
                                            std::to_string(t));
    }
};

namespace detail {

// n == T passes through; T = k*n holds each value k times; n = k*T averages
// each group of k. Anything else is a grid mismatch.
inline std::vector<double> resample_to_grid(const std::vector<double>& vals, int T,
                                            const std::string& what) {
    const int n = static_cast<int>(vals.size());
    if (n == T) return vals;
    if (n > 0 && T % n == 0) {
        const int k = T / n;
        std::vector<double> out(T);
        for (int t = 0; t < T; ++t) out[t] = vals[t / k];
        return out;
    }
    if (T > 0 && n % T == 0) {
        const int k = n / T;
        std::vector<double> out(T);
        for (int t = 0; t < T; ++t) {
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += vals[t * k + j];
            out[t] = s / k;
        }
        return out;
    }
    throw std::invalid_argument(what + ": " + std::to_string(n) +
                                " rows cannot be resampled onto a grid of " + std::to_string(T) +
                                " steps");
}

} // namespace detail

/// Reads a `step,value` or `timestamp,value` CSV and resamples it onto the
/// grid (hold to upsample, mean to downsample). Timestamps are hours from
/// the grid origin and must be uniformly spaced.
inline Timeseries load_timeseries_csv(const std::string& path, const std::string& expected_unit,
                                      const TimeGrid& grid) {
    auto table = csv::read_file(path);
    if (table.header.size() != 2)
        throw std::runtime_error(path + ": expected 2 columns (step,value or timestamp,value)");
    const bool by_step = table.header[0] == "step";
    if (!by_step && table.header[0] != "timestamp")
        throw std::runtime_error(path + ": first column must be 'step' or 'timestamp', got '" +
                                 table.header[0] + "'");
    if (table.rows.empty()) throw std::runtime_error(path + ": no data rows");

    std::vector<std::pair<double, double>> keyed;
    keyed.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string ctx = path + ":row " + std::to_string(r + 2);
        keyed.emplace_back(csv::parse_double(table.rows[r][0], ctx),
                           csv::parse_double(table.rows[r][1], ctx));
    }
    std::sort(keyed.begin(), keyed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    if (by_step) {
        for (std::size_t r = 0; r < keyed.size(); ++r)
            if (keyed[r].first != static_cast<double>(r))
                throw std::runtime_error(path + ": step column must be contiguous from 0; row " +
                                         std::to_string(r) + " has step " +
                                         std::to_string(keyed[r].first));
    } else if (keyed.size() >= 2) {
        const double spacing = keyed[1].first - keyed[0].first;
        if (!(spacing > 0.0))
            throw std::runtime_error(path + ": timestamps must be strictly increasing");
        for (std::size_t r = 2; r < keyed.size(); ++r) {
            const double d = keyed[r].first - keyed[r - 1].first;
            if (std::abs(d - spacing) > 1e-9 * std::max(1.0, spacing))
                throw std::runtime_error(path + ": non-uniform timestamp spacing near row " +
                                         std::to_string(r));
        }
    }

    std::vector<double> raw(keyed.size());
    for (std::size_t r = 0; r < keyed.size(); ++r) raw[r] = keyed[r].second;

    Timeseries ts;
    ts.unit = expected_unit;
    ts.values = detail::resample_to_grid(raw, grid.steps, path);
    ts.validate(grid, path);
    return ts;
}

inline void write_timeseries_csv(const std::string& path, const std::vector<double>& values,
                                 const std::string& value_col = "value") {
    csv::Writer w(path);
    w.row({"step", value_col});
    for (std::size_t t = 0; t < values.size(); ++t)
        w.row({std::to_string(t), csv::format_double(values[t])});
    w.close();
}

/// Closed-form stand-ins for the community profiles: a double-peaked
/// baseload, a midday solar bell and a wholesale price with morning/evening
/// peaks and a cheap midday valley.
inline std::vector<double> builtin_profile(const std::string& name, double scale,
                                           const TimeGrid& grid) {
    auto bump = [](double h, double center, double width) {
        const double z = (h - center) / width;
        return std::exp(-z * z);
    };
    std::vector<double> out(grid.steps);
    for (int t = 0; t < grid.steps; ++t) {
        double h = (t + 0.5) * grid.step_hours;
        h -= 24.0 * std::floor(h / 24.0);
        double v = 0.0;
        if (name == "community") {
            v = 0.55 + 0.12 * bump(h, 9.5, 2.5) + 0.33 * bump(h, 19.0, 2.6);
        } else if (name == "solar") {
            const double x = (h - 13.0) / 7.0;
            v = std::abs(x) < 1.0 ? std::pow(std::cos(x * 1.5707963267948966), 1.5) : 0.0;
        } else if (name == "caiso_price") {
            v = 0.030 + 0.018 * bump(h, 8.5, 1.8) + 0.032 * bump(h, 19.5, 2.2) -
                0.012 * bump(h, 13.0, 3.0);
            v = std::max(0.005, v);
        } else {
            throw std::invalid_argument("unknown builtin profile '" + name + "'");
        }
        out[t] = scale * v;
    }
    return out;
}

struct SeriesSpec {
    enum class Kind { Builtin, Csv };
    Kind kind = Kind::Builtin;
    std::string csv_path;
    std::string builtin = "community";
    double scale = 1.0;
};

struct ScenarioConfig {
    TimeGrid grid{96, 0.25};
    SeriesSpec baseload{SeriesSpec::Kind::Builtin, "", "community", 6000.0};
    SeriesSpec solar{SeriesSpec::Kind::Builtin, "", "solar", 2500.0};
    SeriesSpec price{SeriesSpec::Kind::Builtin, "", "caiso_price", 1.0};

    bool sessions_from_csv = false;
    std::string sessions_csv;
    int gen_count = 1240;
    BehaviorConfig behavior;

    double theta = 0.01;
    ConsensusOptions consensus; // beta 2.0, err_tol 1e-4, k_max 200
    InitPolicy init = InitPolicy::Asap;
    PerturbationConfig perturbation;
    EstimatorPolicy estimator = EstimatorPolicy::DeclaredPersistence;
    bool perfect_forecast = true;
    double forecast_sigma = 0.0;
    SolverOptions solver;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    bool gen_seed_explicit = false;
    std::uint64_t gen_seed = 0;
    bool perturb_seed_explicit = false;

    std::uint64_t effective_gen_seed() const {
        return gen_seed_explicit ? gen_seed : mix_seed(seed, 0x6e6eULL);
    }
    std::uint64_t effective_perturb_seed() const {
        return perturb_seed_explicit ? perturbation.seed : mix_seed(seed, 0x9e49ULL);
    }

    nlohmann::json resolved_json() const;
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& json_path, const std::string& msg) {
    throw std::invalid_argument("scenario config: " + json_path + ": " + msg);
}

inline void reject_unknown(const nlohmann::json& j, const std::string& json_path,
                           std::initializer_list<const char*> allowed) {
    if (!j.is_object()) config_error(json_path, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok) config_error(json_path + "/" + key, "unknown key");
    }
}

inline double get_number(const nlohmann::json& j, const std::string& json_path, const char* key,
                         double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) config_error(json_path + "/" + key, "expected a number");
    return j[key].get<double>();
}

inline long long get_integer(const nlohmann::json& j, const std::string& json_path,
                             const char* key, long long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) config_error(json_path + "/" + key, "expected an integer");
    return j[key].get<long long>();
}

inline bool get_bool(const nlohmann::json& j, const std::string& json_path, const char* key,
                     bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) config_error(json_path + "/" + key, "expected a boolean");
    return j[key].get<bool>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& json_path,
                              const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) config_error(json_path + "/" + key, "expected a string");
    return j[key].get<std::string>();
}

inline SeriesSpec parse_series(const nlohmann::json& j, const std::string& json_path,
                               const SeriesSpec& fallback) {
    reject_unknown(j, json_path, {"csv", "builtin", "scale"});
    SeriesSpec s = fallback;
    if (j.contains("csv") && j.contains("builtin"))
        config_error(json_path, "give either 'csv' or 'builtin', not both");
    if (j.contains("csv")) {
        s.kind = SeriesSpec::Kind::Csv;
        s.csv_path = get_string(j, json_path, "csv", "");
    } else if (j.contains("builtin")) {
        s.kind = SeriesSpec::Kind::Builtin;
        s.builtin = get_string(j, json_path, "builtin", s.builtin);
    }
    s.scale = get_number(j, json_path, "scale", s.scale);
    return s;
}

inline BehaviorConfig parse_behavior(const nlohmann::json& j, const std::string& json_path,
                                     const BehaviorConfig& fallback) {
    reject_unknown(j, json_path,
                   {"start_mixture", "duration_median_hours", "duration_log_sigma",
                    "duration_min_hours", "duration_max_hours", "flex_alpha", "flex_beta",
                    "pmax_kw", "eta", "battery_kwh"});
    BehaviorConfig b = fallback;
    if (j.contains("start_mixture")) {
        if (!j["start_mixture"].is_array())
            config_error(json_path + "/start_mixture", "expected an array");
        b.start_mixture.clear();
        int i = 0;
        for (const auto& m : j["start_mixture"]) {
            const std::string mp = json_path + "/start_mixture/" + std::to_string(i++);
            reject_unknown(m, mp, {"mean_hour", "std_hour", "weight"});
            StartTimeMode mode;
            mode.mean_hour = get_number(m, mp, "mean_hour", 12.0);
            mode.std_hour = get_number(m, mp, "std_hour", 1.0);
            mode.weight = get_number(m, mp, "weight", 1.0);
            b.start_mixture.push_back(mode);
        }
    }
    if (j.contains("duration_median_hours")) {
        const double med = get_number(j, json_path, "duration_median_hours", 6.0);
        if (!(med > 0.0)) config_error(json_path + "/duration_median_hours", "must be > 0");
        b.duration_log_mu = std::log(med);
    }
    b.duration_log_sigma = get_number(j, json_path, "duration_log_sigma", b.duration_log_sigma);
    b.duration_min_hours = get_number(j, json_path, "duration_min_hours", b.duration_min_hours);
    b.duration_max_hours = get_number(j, json_path, "duration_max_hours", b.duration_max_hours);
    b.flex_alpha = get_number(j, json_path, "flex_alpha", b.flex_alpha);
    b.flex_beta = get_number(j, json_path, "flex_beta", b.flex_beta);
    b.p_max = get_number(j, json_path, "pmax_kw", b.p_max);
    b.eta = get_number(j, json_path, "eta", b.eta);
    b.battery_cap = get_number(j, json_path, "battery_kwh", b.battery_cap);
    b.validate();
    return b;
}

} // namespace detail

/// Parses and fully validates a scenario document. Defaults are applied for
/// absent keys, unknown keys are rejected, and every error carries the JSON
/// path of the offending entry.
inline ScenarioConfig parse_scenario_json(const nlohmann::json& j) {
    using detail::config_error;
    using detail::get_bool;
    using detail::get_integer;
    using detail::get_number;
    using detail::get_string;
    using detail::reject_unknown;

    reject_unknown(j, "$",
                   {"grid", "baseload", "solar", "price", "sessions", "theta", "consensus",
                    "perturbation", "estimator", "perfect_forecast", "forecast_sigma", "solver",
                    "output_dir", "seed"});
    ScenarioConfig cfg;

    if (j.contains("grid")) {
        reject_unknown(j["grid"], "$/grid", {"steps", "step_hours"});
        const long long steps = get_integer(j["grid"], "$/grid", "steps", cfg.grid.steps);
        const double dt = get_number(j["grid"], "$/grid", "step_hours", cfg.grid.step_hours);
        if (steps < 2) config_error("$/grid/steps", "must be >= 2");
        if (!(dt > 0.0)) config_error("$/grid/step_hours", "must be > 0");
        cfg.grid = TimeGrid(static_cast<int>(steps), dt);
    }
    if (j.contains("baseload")) cfg.baseload = detail::parse_series(j["baseload"], "$/baseload", cfg.baseload);
    if (j.contains("solar")) cfg.solar = detail::parse_series(j["solar"], "$/solar", cfg.solar);
    if (j.contains("price")) cfg.price = detail::parse_series(j["price"], "$/price", cfg.price);

    if (j.contains("sessions")) {
        reject_unknown(j["sessions"], "$/sessions", {"csv", "generate"});
        const auto& s = j["sessions"];
        if (s.contains("csv") && s.contains("generate"))
            config_error("$/sessions", "give either 'csv' or 'generate', not both");
        if (s.contains("csv")) {
            cfg.sessions_from_csv = true;
            cfg.sessions_csv = get_string(s, "$/sessions", "csv", "");
        } else if (s.contains("generate")) {
            reject_unknown(s["generate"], "$/sessions/generate", {"count", "seed", "behavior"});
            const long long count =
                get_integer(s["generate"], "$/sessions/generate", "count", cfg.gen_count);
            if (count < 0) config_error("$/sessions/generate/count", "must be >= 0");
            cfg.gen_count = static_cast<int>(count);
            if (s["generate"].contains("seed")) {
                cfg.gen_seed_explicit = true;
                cfg.gen_seed = static_cast<std::uint64_t>(
                    get_integer(s["generate"], "$/sessions/generate", "seed", 0));
            }
            if (s["generate"].contains("behavior"))
                cfg.behavior = detail::parse_behavior(s["generate"]["behavior"],
                                                      "$/sessions/generate/behavior", cfg.behavior);
        }
    }

    cfg.theta = get_number(j, "$", "theta", cfg.theta);
    if (cfg.theta < 0.0) config_error("$/theta", "must be >= 0");

    if (j.contains("consensus")) {
        reject_unknown(j["consensus"], "$/consensus", {"beta", "err_tol", "k_max", "init"});
        cfg.consensus.beta = get_number(j["consensus"], "$/consensus", "beta", cfg.consensus.beta);
        cfg.consensus.err_tol =
            get_number(j["consensus"], "$/consensus", "err_tol", cfg.consensus.err_tol);
        cfg.consensus.k_max = static_cast<int>(
            get_integer(j["consensus"], "$/consensus", "k_max", cfg.consensus.k_max));
        cfg.init = init_from_name(get_string(j["consensus"], "$/consensus", "init", "asap"));
        if (!(cfg.consensus.beta > 0.0)) config_error("$/consensus/beta", "must be > 0");
        if (!(cfg.consensus.err_tol > 0.0)) config_error("$/consensus/err_tol", "must be > 0");
        if (cfg.consensus.k_max < 1) config_error("$/consensus/k_max", "must be >= 1");
    }

    if (j.contains("perturbation")) {
        reject_unknown(j["perturbation"], "$/perturbation",
                       {"sigma_d_steps", "sigma_e_kwh", "sigma_e_frac", "profile_sigma", "seed"});
        auto& p = cfg.perturbation;
        p.sigma_d_steps =
            get_number(j["perturbation"], "$/perturbation", "sigma_d_steps", p.sigma_d_steps);
        p.sigma_e_kwh =
            get_number(j["perturbation"], "$/perturbation", "sigma_e_kwh", p.sigma_e_kwh);
        p.sigma_e_frac =
            get_number(j["perturbation"], "$/perturbation", "sigma_e_frac", p.sigma_e_frac);
        p.profile_sigma =
            get_number(j["perturbation"], "$/perturbation", "profile_sigma", p.profile_sigma);
        if (j["perturbation"].contains("seed")) {
            cfg.perturb_seed_explicit = true;
            p.seed = static_cast<std::uint64_t>(
                get_integer(j["perturbation"], "$/perturbation", "seed", 0));
        }
        p.validate();
    }

    const std::string est = get_string(j, "$", "estimator", estimator_name(cfg.estimator));
    cfg.estimator = estimator_from_name(est);
    cfg.perfect_forecast = get_bool(j, "$", "perfect_forecast", cfg.perfect_forecast);
    cfg.forecast_sigma = get_number(j, "$", "forecast_sigma", cfg.forecast_sigma);
    if (cfg.forecast_sigma < 0.0) config_error("$/forecast_sigma", "must be >= 0");

    if (j.contains("solver")) {
        reject_unknown(j["solver"], "$/solver", {"feas_tol", "opt_tol", "max_iters"});
        cfg.solver.feas_tol = get_number(j["solver"], "$/solver", "feas_tol", cfg.solver.feas_tol);
        cfg.solver.opt_tol = get_number(j["solver"], "$/solver", "opt_tol", cfg.solver.opt_tol);
        cfg.solver.max_iters = static_cast<int>(
            get_integer(j["solver"], "$/solver", "max_iters", cfg.solver.max_iters));
        if (!(cfg.solver.opt_tol > 0.0)) config_error("$/solver/opt_tol", "must be > 0");
        if (cfg.solver.max_iters < 1) config_error("$/solver/max_iters", "must be >= 1");
    }

    cfg.output_dir = get_string(j, "$", "output_dir", cfg.output_dir);
    cfg.seed = static_cast<std::uint64_t>(get_integer(j, "$", "seed", static_cast<long long>(cfg.seed)));
    return cfg;
}

inline ScenarioConfig parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("scenario config: " + path + " is not valid JSON: " + e.what());
    }
    return parse_scenario_json(j);
}

inline nlohmann::json ScenarioConfig::resolved_json() const {
    nlohmann::json j;
    j["grid"] = {{"steps", grid.steps}, {"step_hours", grid.step_hours}};
    auto series = [](const SeriesSpec& s) {
        nlohmann::json out;
        if (s.kind == SeriesSpec::Kind::Csv)
            out["csv"] = s.csv_path;
        else
            out["builtin"] = s.builtin;
        out["scale"] = s.scale;
        return out;
    };
    j["baseload"] = series(baseload);
    j["solar"] = series(solar);
    j["price"] = series(price);
    if (sessions_from_csv) {
        j["sessions"] = {{"csv", sessions_csv}};
    } else {
        nlohmann::json mix = nlohmann::json::array();
        for (const auto& m : behavior.start_mixture)
            mix.push_back({{"mean_hour", m.mean_hour}, {"std_hour", m.std_hour}, {"weight", m.weight}});
        j["sessions"] = {{"generate",
                          {{"count", gen_count},
                           {"seed", effective_gen_seed()},
                           {"behavior",
                            {{"start_mixture", mix},
                             {"duration_median_hours", std::exp(behavior.duration_log_mu)},
                             {"duration_log_sigma", behavior.duration_log_sigma},
                             {"duration_min_hours", behavior.duration_min_hours},
                             {"duration_max_hours", behavior.duration_max_hours},
                             {"flex_alpha", behavior.flex_alpha},
                             {"flex_beta", behavior.flex_beta},
                             {"pmax_kw", behavior.p_max},
                             {"eta", behavior.eta},
                             {"battery_kwh", behavior.battery_cap}}}}}};
    }
    j["theta"] = theta;
    j["consensus"] = {{"beta", consensus.beta},
                      {"err_tol", consensus.err_tol},
                      {"k_max", consensus.k_max},
                      {"init", init == InitPolicy::Asap ? "asap" : "random"}};
    j["perturbation"] = {{"sigma_d_steps", perturbation.sigma_d_steps},
                         {"sigma_e_kwh", perturbation.sigma_e_kwh},
                         {"sigma_e_frac", perturbation.sigma_e_frac},
                         {"profile_sigma", perturbation.profile_sigma},
                         {"seed", effective_perturb_seed()}};
    j["estimator"] = estimator_name(estimator);
    j["perfect_forecast"] = perfect_forecast;
    j["forecast_sigma"] = forecast_sigma;
    j["solver"] = {{"feas_tol", solver.feas_tol},
                   {"opt_tol", solver.opt_tol},
                   {"max_iters", solver.max_iters}};
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    return j;
}

inline std::vector<double> resolve_series(const SeriesSpec& spec, const std::string& unit,
                                          const TimeGrid& grid) {
    if (spec.kind == SeriesSpec::Kind::Builtin) return builtin_profile(spec.builtin, spec.scale, grid);
    Timeseries ts = load_timeseries_csv(spec.csv_path, unit, grid);
    if (spec.scale != 1.0)
        for (double& v : ts.values) v *= spec.scale;
    return ts.values;
}

/// Everything a run needs, resolved from configuration: forecast series,
/// declared sessions, aggregate envelope, and the realized (perturbed)
/// behaviour for the simulation stage.
struct AssembledScenario {
    ScenarioConfig cfg;
    std::vector<double> baseload; // forecast
    std::vector<double> solar;
    std::vector<double> price;
    std::vector<ChargingSession> sessions;
    AggregateEnvelope envelope;
    SimScenario sim;
    EventLog setup_events;

    DayAheadInput dayahead_input() const {
        DayAheadInput in;
        in.lambda = price;
        in.baseload = baseload;
        in.solar = solar;
        in.theta = cfg.theta;
        in.grid = cfg.grid;
        return in;
    }
};

inline AssembledScenario assemble_scenario(const ScenarioConfig& cfg) {
    AssembledScenario a;
    a.cfg = cfg;
    a.baseload = resolve_series(cfg.baseload, "kW", cfg.grid);
    a.solar = resolve_series(cfg.solar, "kW", cfg.grid);
    a.price = resolve_series(cfg.price, "$/kWh", cfg.grid);
    for (double v : a.solar)
        if (v < 0.0) throw std::invalid_argument("scenario: solar series must be >= 0");

    if (cfg.sessions_from_csv)
        a.sessions = read_sessions_csv(cfg.sessions_csv, cfg.grid, &a.setup_events);
    else
        a.sessions = sample_sessions(cfg.behavior, cfg.gen_count, cfg.grid,
                                     cfg.effective_gen_seed(), &a.setup_events);

    std::vector<FlexEnvelope> envs;
    envs.reserve(a.sessions.size());
    for (const auto& s : a.sessions) envs.push_back(build_envelope(s, cfg.grid));
    a.envelope = aggregate_envelopes(envs, cfg.grid.steps);

    a.sim.grid = cfg.grid;
    a.sim.sessions = a.sessions;
    a.sim.forecast_baseload = a.baseload;
    a.sim.forecast_solar = a.solar;

    PerturbationConfig perturb = cfg.perturbation;
    perturb.seed = cfg.effective_perturb_seed();
    a.sim.realized_duration.reserve(a.sessions.size());
    a.sim.realized_energy.reserve(a.sessions.size());
    for (const auto& s : a.sessions) {
        const auto r = perturb_session(s, perturb, cfg.grid);
        a.sim.realized_duration.push_back(r.duration_steps);
        a.sim.realized_energy.push_back(r.energy_kwh);
    }
    {
        Rng rng(mix_seed(perturb.seed, 0xBA5EULL));
        a.sim.realized_baseload = perturb_profile(a.baseload, perturb.profile_sigma, rng, false);
    }
    {
        Rng rng(mix_seed(perturb.seed, 0x501AULL));
        a.sim.realized_solar = perturb_profile(a.solar, perturb.profile_sigma, rng, true);
    }
    return a;
}

} // namespace evsched
