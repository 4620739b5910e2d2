#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "evsched/csv.hpp"
#include "evsched/events.hpp"
#include "evsched/time_grid.hpp"

namespace evsched {

/// One EV's declared charging session: arrival, stay, demand and limits.
/// Power limits are battery-side, i.e. already multiplied by the charger
/// efficiency eta.
struct ChargingSession {
    long long id = 0;
    int t_start = 0;        // arrival step, 0 <= t_start < T
    int duration = 1;       // plugged steps, t_start + duration <= T
    double energy_req = 0;  // kWh demanded by departure
    double p_max = 6.6;     // kW, facility limit (grid side)
    double eta = 1.0;       // efficiency in (0, 1]
    double battery_cap = 60.0; // kWh

    double rate_limit() const { return p_max * eta; } // battery-side kW
    int t_end() const { return t_start + duration; }

    double deliverable(double dt_hours) const { return rate_limit() * duration * dt_hours; }
};

// Validates hard invariants; repairs an over-stated demand by clamping it to
// what the stay window (and the battery) can absorb. Hard violations throw
// with the session id in the message.
inline ChargingSession validate_session(ChargingSession s, const TimeGrid& grid,
                                         EventLog* log = nullptr) {
    const std::string who = "session id=" + std::to_string(s.id);
    if (s.t_start < 0 || s.t_start >= grid.steps)
        throw std::invalid_argument(who + ": start_step " + std::to_string(s.t_start) +
                                    " outside grid [0, " + std::to_string(grid.steps) + ")");
    if (s.duration < 1)
        throw std::invalid_argument(who + ": duration_steps must be >= 1");
    if (s.t_end() > grid.steps)
        throw std::invalid_argument(who + ": window [" + std::to_string(s.t_start) + ", " +
                                    std::to_string(s.t_end()) + ") exceeds grid of " +
                                    std::to_string(grid.steps) + " steps");
    if (!(s.p_max > 0.0)) throw std::invalid_argument(who + ": pmax_kw must be > 0");
    if (!(s.eta > 0.0 && s.eta <= 1.0)) throw std::invalid_argument(who + ": eta must be in (0, 1]");
    if (s.energy_req < 0.0) throw std::invalid_argument(who + ": energy_kwh must be >= 0");
    if (!(s.battery_cap >= 0.0)) throw std::invalid_argument(who + ": battery_kwh must be >= 0");

    const double cap = std::min(s.deliverable(grid.step_hours), s.battery_cap);
    if (s.energy_req > cap) {
        if (log)
            log->add(-1, "demand_repair", s.id,
                     {{"requested_kwh", s.energy_req}, {"repaired_kwh", cap}});
        s.energy_req = cap;
    }
    return s;
}

// Header pinned by the file contract.
inline const char* kSessionCsvHeader = "id,start_step,duration_steps,energy_kwh,pmax_kw,eta,battery_kwh";

inline std::vector<ChargingSession> read_sessions_csv(const std::string& path,
                                                      const TimeGrid& grid,
                                                      EventLog* log = nullptr) {
    auto table = csv::read_file(path);
    const int c_id = table.column("id", path);
    const int c_start = table.column("start_step", path);
    const int c_dur = table.column("duration_steps", path);
    const int c_energy = table.column("energy_kwh", path);
    const int c_pmax = table.column("pmax_kw", path);
    const int c_eta = table.column("eta", path);
    const int c_batt = table.column("battery_kwh", path);

    std::vector<ChargingSession> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string ctx = path + ":row " + std::to_string(r + 2);
        ChargingSession s;
        s.id = csv::parse_int(row[c_id], ctx);
        s.t_start = static_cast<int>(csv::parse_int(row[c_start], ctx));
        s.duration = static_cast<int>(csv::parse_int(row[c_dur], ctx));
        s.energy_req = csv::parse_double(row[c_energy], ctx);
        s.p_max = csv::parse_double(row[c_pmax], ctx);
        s.eta = csv::parse_double(row[c_eta], ctx);
        s.battery_cap = csv::parse_double(row[c_batt], ctx);
        out.push_back(validate_session(s, grid, log));
    }
    return out;
}

inline void write_sessions_csv(const std::string& path,
                               const std::vector<ChargingSession>& sessions) {
    csv::Writer w(path);
    w.row({"id", "start_step", "duration_steps", "energy_kwh", "pmax_kw", "eta", "battery_kwh"});
    for (const auto& s : sessions) {
        w.row({std::to_string(s.id), std::to_string(s.t_start), std::to_string(s.duration),
               csv::format_double(s.energy_req), csv::format_double(s.p_max),
               csv::format_double(s.eta), csv::format_double(s.battery_cap)});
    }
    w.close();
}

} // namespace evsched
