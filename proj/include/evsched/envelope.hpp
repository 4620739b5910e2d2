#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "evsched/csv.hpp"
#include "evsched/session.hpp"
#include "evsched/time_grid.hpp"

namespace evsched {

/// Energy/power boundaries of one charging session over the full grid.
/// e_plus traces the as-soon-as-possible cumulative energy, e_minus the
/// as-late-as-possible one; any feasible trajectory lies between them and
/// both meet the demand at the final in-window step.
struct FlexEnvelope {
    std::vector<double> e_plus;  // kWh, upper cumulative energy boundary
    std::vector<double> e_minus; // kWh, lower cumulative energy boundary
    std::vector<double> p_plus;  // kW, battery-side power ceiling
    std::vector<double> p_minus; // kW, always 0 (no discharging)

    std::size_t size() const { return e_plus.size(); }
};

/// Fleet-summed boundaries.
struct AggregateEnvelope {
    std::vector<double> E_plus;
    std::vector<double> E_minus;
    std::vector<double> P_plus;
    std::vector<double> P_minus;

    std::size_t size() const { return E_plus.size(); }
};

inline FlexEnvelope build_envelope(const ChargingSession& s, const TimeGrid& grid) {
    validate_session(s, grid); // throws on window/limit violations, names the id
    const int T = grid.steps;
    const double rate = s.rate_limit();
    const double per_step = rate * grid.step_hours;

    FlexEnvelope env;
    env.e_plus.resize(T);
    env.e_minus.resize(T);
    env.p_plus.assign(T, 0.0);
    env.p_minus.assign(T, 0.0);

    const int last = s.t_end() - 1; // final in-window step
    for (int t = 0; t < T; ++t) {
        if (t >= s.t_end()) {
            env.e_plus[t] = s.energy_req;
            env.e_minus[t] = s.energy_req;
            continue;
        }
        const int steps_so_far = std::max(0, t - s.t_start + 1);
        env.e_plus[t] = std::min(s.energy_req, per_step * steps_so_far);
        env.e_minus[t] = std::max(0.0, s.energy_req - per_step * (last - t));
        if (t >= s.t_start) env.p_plus[t] = rate;
    }
    return env;
}

inline AggregateEnvelope aggregate_envelopes(const std::vector<FlexEnvelope>& envelopes,
                                             int grid_steps = -1) {
    std::size_t T;
    if (!envelopes.empty())
        T = envelopes.front().size();
    else if (grid_steps >= 0)
        T = static_cast<std::size_t>(grid_steps);
    else
        throw std::invalid_argument("aggregate_envelopes: empty list needs an explicit grid size");

    AggregateEnvelope agg;
    agg.E_plus.assign(T, 0.0);
    agg.E_minus.assign(T, 0.0);
    agg.P_plus.assign(T, 0.0);
    agg.P_minus.assign(T, 0.0);
    for (const auto& env : envelopes) {
        if (env.size() != T)
            throw std::invalid_argument("aggregate_envelopes: envelope length " +
                                        std::to_string(env.size()) + " does not match " +
                                        std::to_string(T));
        for (std::size_t t = 0; t < T; ++t) {
            agg.E_plus[t] += env.e_plus[t];
            agg.E_minus[t] += env.e_minus[t];
            agg.P_plus[t] += env.p_plus[t];
            agg.P_minus[t] += env.p_minus[t];
        }
    }
    return agg;
}

struct Violation {
    int step;
    std::string bound; // power_lower | power_upper | energy_lower | energy_upper
    double magnitude;  // kW for power bounds, kWh for energy bounds
};

struct FeasibilityVerdict {
    bool feasible = true;
    std::vector<Violation> violations;
};

/// Checks a fleet power profile against the aggregate envelope:
/// 0 <= P(t) <= P_plus(t) + tol and
/// E_minus(t) - tol <= cumsum(P)(t) * dt <= E_plus(t) + tol.
inline FeasibilityVerdict check_feasible(const std::vector<double>& P,
                                         const AggregateEnvelope& agg, const TimeGrid& grid,
                                         double tol = 1e-9) {
    if (P.size() != static_cast<std::size_t>(grid.steps) || agg.size() != P.size())
        throw std::invalid_argument("check_feasible: profile length " + std::to_string(P.size()) +
                                    " does not match grid of " + std::to_string(grid.steps));
    FeasibilityVerdict v;
    double cum = 0.0;
    for (int t = 0; t < grid.steps; ++t) {
        if (P[t] < 0.0)
            v.violations.push_back({t, "power_lower", -P[t]});
        if (P[t] > agg.P_plus[t] + tol)
            v.violations.push_back({t, "power_upper", P[t] - agg.P_plus[t]});
        cum += P[t] * grid.step_hours;
        if (cum < agg.E_minus[t] - tol)
            v.violations.push_back({t, "energy_lower", agg.E_minus[t] - cum});
        if (cum > agg.E_plus[t] + tol)
            v.violations.push_back({t, "energy_upper", cum - agg.E_plus[t]});
    }
    v.feasible = v.violations.empty();
    return v;
}

inline void write_envelope_csv(const std::string& path, const AggregateEnvelope& agg) {
    csv::Writer w(path);
    w.row({"step", "e_plus_kwh", "e_minus_kwh", "p_plus_kw", "p_minus_kw"});
    for (std::size_t t = 0; t < agg.size(); ++t)
        w.row({std::to_string(t), csv::format_double(agg.E_plus[t]),
               csv::format_double(agg.E_minus[t]), csv::format_double(agg.P_plus[t]),
               csv::format_double(agg.P_minus[t])});
    w.close();
}

} // namespace evsched
