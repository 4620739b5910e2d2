#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evsched/events.hpp"
#include "evsched/rng.hpp"
#include "evsched/session.hpp"
#include "evsched/time_grid.hpp"

namespace evsched {

/// Behavioral distributions for synthetic charging sessions. The shipped
/// defaults (bimodal morning/evening arrivals, log-normal stays with a 6 h
/// median, Beta(2,2) session flexibility) are engineering stand-ins and are
/// fully overridable through configuration.
struct StartTimeMode {
    double mean_hour = 8.0;
    double std_hour = 1.5;
    double weight = 0.5;
};

struct BehaviorConfig {
    std::vector<StartTimeMode> start_mixture = {{8.0, 1.5, 0.5}, {18.0, 2.0, 0.5}};
    double duration_log_mu = 1.7917594692280550; // ln(6), hours
    double duration_log_sigma = 0.45;
    double duration_min_hours = 0.5;
    double duration_max_hours = 14.0;
    double flex_alpha = 2.0;
    double flex_beta = 2.0;
    double p_max = 6.6;       // kW
    double eta = 1.0;
    double battery_cap = 60.0; // kWh

    void validate() const {
        if (start_mixture.empty())
            throw std::invalid_argument("BehaviorConfig: start mixture must not be empty");
        double total = 0.0;
        for (const auto& m : start_mixture) {
            if (!(m.std_hour >= 0.0))
                throw std::invalid_argument("BehaviorConfig: start std must be >= 0");
            if (!(m.weight > 0.0))
                throw std::invalid_argument("BehaviorConfig: mixture weights must be > 0");
            total += m.weight;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("BehaviorConfig: mixture weights must sum to 1");
        if (!(duration_log_sigma >= 0.0) || !(duration_min_hours > 0.0) ||
            !(duration_max_hours >= duration_min_hours))
            throw std::invalid_argument("BehaviorConfig: invalid duration distribution");
        if (!(flex_alpha > 0.0 && flex_beta > 0.0))
            throw std::invalid_argument("BehaviorConfig: Beta parameters must be > 0");
        if (!(p_max > 0.0) || !(eta > 0.0 && eta <= 1.0) || !(battery_cap > 0.0))
            throw std::invalid_argument("BehaviorConfig: invalid EV limits");
    }

    double mixture_mean_hour() const {
        double m = 0.0;
        for (const auto& mode : start_mixture) m += mode.weight * mode.mean_hour;
        return m;
    }
};

struct PerturbationConfig {
    double sigma_d_steps = 0.0;  // std of stay-duration noise
    double sigma_e_kwh = 0.0;    // absolute energy noise
    double sigma_e_frac = 0.0;   // relative energy noise, fraction of declared demand
    double profile_sigma = 0.0;  // relative noise on load/solar curves
    std::uint64_t seed = 0;

    void validate() const {
        if (sigma_d_steps < 0.0 || sigma_e_kwh < 0.0 || sigma_e_frac < 0.0 || profile_sigma < 0.0)
            throw std::invalid_argument("PerturbationConfig: sigmas must be >= 0");
    }
};

/// Session flexibility f is the fraction of the plugged-in time NOT needed
/// for charging, so charging_time / plugged_time = 1 - f and a larger f
/// leaves more deferral freedom.
inline double energy_from_flexibility(double f, int duration_steps, double p_max, double eta,
                                      double dt_hours) {
    if (!(f >= 0.0 && f < 1.0))
        throw std::invalid_argument("energy_from_flexibility: f must be in [0, 1)");
    return (1.0 - f) * p_max * eta * duration_steps * dt_hours;
}

/// Draws n sessions; each EV's stream depends only on (seed, id) so adding
/// an EV never shifts the others' draws. Windows are clipped to the grid and
/// demands repaired to what the window can deliver, so the returned sessions
/// satisfy every invariant without further repair.
inline std::vector<ChargingSession> sample_sessions(const BehaviorConfig& cfg, int n,
                                                    const TimeGrid& grid, std::uint64_t seed,
                                                    EventLog* log = nullptr) {
    cfg.validate();
    if (n < 0) throw std::invalid_argument("sample_sessions: n must be >= 0");
    std::vector<ChargingSession> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const long long id = i + 1;
        Rng rng(mix_seed(seed, 0x5e5510ULL, static_cast<std::uint64_t>(id)));

        // pick a mixture mode, then the start hour (wrapped into the day)
        double pick = rng.u01();
        const StartTimeMode* mode = &cfg.start_mixture.back();
        for (const auto& m : cfg.start_mixture) {
            if (pick < m.weight) {
                mode = &m;
                break;
            }
            pick -= m.weight;
        }
        double hour = rng.normal(mode->mean_hour, mode->std_hour);
        const double day_hours = 24.0;
        hour = hour - day_hours * std::floor(hour / day_hours);

        double dur_hours = std::clamp(rng.lognormal(cfg.duration_log_mu, cfg.duration_log_sigma),
                                      cfg.duration_min_hours, cfg.duration_max_hours);
        const double flex = rng.beta(cfg.flex_alpha, cfg.flex_beta);

        ChargingSession s;
        s.id = id;
        s.t_start = std::min(grid.steps - 1,
                             static_cast<int>(std::floor(hour / grid.step_hours + 0.5)));
        const int max_dur = grid.steps - s.t_start;
        s.duration = std::clamp(
            static_cast<int>(std::floor(dur_hours / grid.step_hours + 0.5)), 1, max_dur);
        s.p_max = cfg.p_max;
        s.eta = cfg.eta;
        s.battery_cap = cfg.battery_cap;
        s.energy_req = std::min(
            energy_from_flexibility(flex, s.duration, cfg.p_max, cfg.eta, grid.step_hours),
            cfg.battery_cap);
        out.push_back(validate_session(s, grid, log));
    }
    return out;
}

struct RealizedSession {
    int duration_steps;
    double energy_kwh;
};

/// Perturbs one declared session into its realized behaviour. Deterministic
/// per (seed, session id); the realized demand never exceeds what the
/// realized stay (or the battery) can absorb.
inline RealizedSession perturb_session(const ChargingSession& s, const PerturbationConfig& cfg,
                                       const TimeGrid& grid) {
    cfg.validate();
    Rng rng(mix_seed(cfg.seed, 0x0e17ULL, static_cast<std::uint64_t>(s.id)));
    RealizedSession r;
    const double d_noise = cfg.sigma_d_steps > 0.0 ? rng.normal(0.0, cfg.sigma_d_steps) : 0.0;
    r.duration_steps = std::clamp(
        static_cast<int>(std::llround(s.duration + d_noise)), 1, grid.steps - s.t_start);
    const double e_sigma = cfg.sigma_e_kwh + cfg.sigma_e_frac * s.energy_req;
    const double e_noise = e_sigma > 0.0 ? rng.normal(0.0, e_sigma) : 0.0;
    const double cap = std::min(s.rate_limit() * r.duration_steps * grid.step_hours,
                                s.battery_cap);
    r.energy_kwh = std::clamp(s.energy_req + e_noise, 0.0, cap);
    return r;
}

/// Multiplies each entry by (1 + N(0, sigma)); entries are floored at zero
/// when the series cannot be negative (solar).
inline std::vector<double> perturb_profile(const std::vector<double>& series, double sigma,
                                           Rng& rng, bool floor_at_zero = false) {
    if (sigma < 0.0) throw std::invalid_argument("perturb_profile: sigma must be >= 0");
    std::vector<double> out(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        double v = sigma > 0.0 ? series[t] * (1.0 + rng.normal(0.0, sigma)) : series[t];
        if (floor_at_zero) v = std::max(0.0, v);
        out[t] = v;
    }
    return out;
}

} // namespace evsched
