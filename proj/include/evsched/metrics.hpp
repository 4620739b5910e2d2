#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace evsched {

/// Maximum absolute change of a load series between consecutive steps (kW
/// per step). This matches the "maximum load ramping" table figure; the
/// sum-of-squares ramp penalty is reported separately by the day-ahead
/// solver.
inline double ramp_index(const std::vector<double>& load) {
    if (load.size() < 2)
        throw std::invalid_argument("ramp_index: need at least 2 samples, got " +
                                    std::to_string(load.size()));
    double worst = 0.0;
    for (std::size_t t = 0; t + 1 < load.size(); ++t)
        worst = std::max(worst, std::abs(load[t + 1] - load[t]));
    return worst;
}

inline double ramp_reduction(double uncontrolled, double controlled) {
    if (!(uncontrolled > 0.0))
        throw std::invalid_argument("ramp_reduction: uncontrolled ramp must be > 0");
    return 100.0 * (uncontrolled - controlled) / uncontrolled;
}

inline double total_cost(const std::vector<double>& load_kw, const std::vector<double>& price,
                         double dt_hours) {
    if (load_kw.size() != price.size())
        throw std::invalid_argument("total_cost: length mismatch");
    double cost = 0.0;
    for (std::size_t t = 0; t < load_kw.size(); ++t) cost += price[t] * load_kw[t] * dt_hours;
    return cost;
}

inline double tracking_rmse(const std::vector<double>& target, const std::vector<double>& realized) {
    if (target.size() != realized.size())
        throw std::invalid_argument("tracking_rmse: length mismatch");
    if (target.empty()) return 0.0;
    double ss = 0.0;
    for (std::size_t t = 0; t < target.size(); ++t) {
        const double d = target[t] - realized[t];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(target.size()));
}

struct MetricsReport {
    std::string label;
    double total_cost_usd = 0.0;
    double uncontrolled_cost_usd = 0.0;
    double ramp_index_uncontrolled = 0.0; // kW per step
    double ramp_index_controlled = 0.0;
    double ramp_reduction_pct = 0.0;
    double tracking_rmse_kw = 0.0;
    double peak_load_kw = 0.0;
    int peak_load_step = 0;
    int ev_count = 0;
    int shortfall_count = 0;
    double shortfall_kwh = 0.0;

    nlohmann::json to_json() const {
        return {{"label", label},
                {"total_cost_usd", total_cost_usd},
                {"uncontrolled_cost_usd", uncontrolled_cost_usd},
                {"ramp_index_uncontrolled_kw_per_step", ramp_index_uncontrolled},
                {"ramp_index_controlled_kw_per_step", ramp_index_controlled},
                {"ramp_reduction_pct", ramp_reduction_pct},
                {"tracking_rmse_kw", tracking_rmse_kw},
                {"peak_load_kw", peak_load_kw},
                {"peak_load_step", peak_load_step},
                {"ev_count", ev_count},
                {"shortfall_count", shortfall_count},
                {"shortfall_kwh", shortfall_kwh}};
    }
};

/// Assembles the report for one run from its realized series. `uncontrolled`
/// is the as-soon-as-possible EV counterfactual on the same fleet.
inline MetricsReport build_report(const std::vector<double>& baseload,
                                  const std::vector<double>& solar,
                                  const std::vector<double>& ev_controlled,
                                  const std::vector<double>& ev_uncontrolled,
                                  const std::vector<double>& target,
                                  const std::vector<double>& price, double dt_hours) {
    const std::size_t T = baseload.size();
    if (solar.size() != T || ev_controlled.size() != T || ev_uncontrolled.size() != T ||
        target.size() != T || price.size() != T)
        throw std::invalid_argument("build_report: series length mismatch");

    std::vector<double> load_controlled(T), load_uncontrolled(T);
    for (std::size_t t = 0; t < T; ++t) {
        const double net_base = baseload[t] - solar[t];
        load_controlled[t] = net_base + ev_controlled[t];
        load_uncontrolled[t] = net_base + ev_uncontrolled[t];
    }

    MetricsReport r;
    r.total_cost_usd = total_cost(load_controlled, price, dt_hours);
    r.uncontrolled_cost_usd = total_cost(load_uncontrolled, price, dt_hours);
    r.ramp_index_controlled = ramp_index(load_controlled);
    r.ramp_index_uncontrolled = ramp_index(load_uncontrolled);
    r.ramp_reduction_pct = ramp_reduction(r.ramp_index_uncontrolled, r.ramp_index_controlled);
    r.tracking_rmse_kw = tracking_rmse(target, ev_controlled);
    for (std::size_t t = 0; t < T; ++t) {
        if (load_controlled[t] > r.peak_load_kw) {
            r.peak_load_kw = load_controlled[t];
            r.peak_load_step = static_cast<int>(t);
        }
    }
    return r;
}

// One-decimal formatting for the human-readable table.
inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

/// Table-1-style layout: one column per run, ramp rows underneath.
inline std::string ramp_table_text(const std::vector<MetricsReport>& reports) {
    std::string out;
    out += "Ramp Reduction";
    for (const auto& r : reports) out += "\t" + r.label;
    out += "\nWith Uncontrolled EV Load";
    for (const auto& r : reports) out += "\t" + format_fixed(r.ramp_index_uncontrolled, 1);
    out += "\nWith Controlled EV Load";
    for (const auto& r : reports) out += "\t" + format_fixed(r.ramp_index_controlled, 1);
    out += "\nMax. ramp reduction";
    for (const auto& r : reports) out += "\t" + format_fixed(r.ramp_reduction_pct, 1) + "%";
    out += '\n';
    return out;
}

inline void write_ramp_table_csv(const std::string& path,
                                 const std::vector<MetricsReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("metrics: cannot write " + path);
    out << "metric";
    for (const auto& r : reports) out << ',' << r.label;
    out << "\nramp_index_uncontrolled_kw_per_step";
    for (const auto& r : reports) out << ',' << format_fixed(r.ramp_index_uncontrolled, 1);
    out << "\nramp_index_controlled_kw_per_step";
    for (const auto& r : reports) out << ',' << format_fixed(r.ramp_index_controlled, 1);
    out << "\nramp_reduction_pct";
    for (const auto& r : reports) out << ',' << format_fixed(r.ramp_reduction_pct, 1);
    out << '\n';
    if (!out) throw std::runtime_error("metrics: write failed for " + path);
}

} // namespace evsched
