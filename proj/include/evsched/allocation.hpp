#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "evsched/events.hpp"
#include "evsched/rng.hpp"
#include "evsched/session.hpp"
#include "evsched/time_grid.hpp"

namespace evsched {

// Compensated (Neumaier) accumulator; keeps fleet-level energy bookkeeping
// consistent to well below the 1e-9 kWh accounting tolerance.
class KahanSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

enum class EvStatus { Pending, Active, Departed };

enum class EstimatorPolicy { Oracle, DeclaredPersistence };

inline EstimatorPolicy estimator_from_name(const std::string& name) {
    if (name == "oracle") return EstimatorPolicy::Oracle;
    if (name == "declared-persistence") return EstimatorPolicy::DeclaredPersistence;
    throw std::invalid_argument("unknown estimator policy '" + name + "'");
}

inline const char* estimator_name(EstimatorPolicy p) {
    return p == EstimatorPolicy::Oracle ? "oracle" : "declared-persistence";
}

/// Controller-side state of one EV during the real-time stage. Realized
/// duration/energy are the hidden truths revealed only through departure
/// (or through the oracle estimator).
struct EVState {
    ChargingSession session;
    int realized_duration = 0;
    double realized_energy = 0.0;
    int d_hat = 0;       // current stay estimate, steps
    double e_hat = 0.0;  // current total-demand estimate, kWh
    double delivered = 0.0;
    std::vector<double> schedule; // over the remaining horizon, index 0 == now
    EvStatus status = EvStatus::Pending;

    int realized_end() const { return session.t_start + realized_duration; }
    int estimated_end() const { return session.t_start + d_hat; }
};

struct ConsensusOptions {
    double beta = 2.0;     // signal damping; larger is more damped
    double err_tol = 1e-4; // l-inf threshold on the signal change
    int k_max = 200;
    int participants = 0;  // N; 0 means "use the number of schedules given"
};

struct ControlSignal {
    std::vector<double> c; // one entry per remaining step
    int iteration = 0;
};

/// c(t) = (sum_n p_n(t) - target(t)) / (beta * N). Returns nothing when no
/// EV participates, signalling the caller to skip the consensus round.
inline std::optional<ControlSignal> control_signal(
    const std::vector<std::vector<double>>& schedules, const std::vector<double>& target,
    const ConsensusOptions& opts, int iteration = 0) {
    const int n = opts.participants > 0 ? opts.participants : static_cast<int>(schedules.size());
    if (n == 0) return std::nullopt;
    if (!(opts.beta > 0.0)) throw std::invalid_argument("control_signal: beta must be > 0");
    const std::size_t horizon = target.size();
    ControlSignal sig;
    sig.iteration = iteration;
    sig.c.resize(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        KahanSum sum;
        for (const auto& p : schedules) {
            if (p.size() != horizon)
                throw std::invalid_argument("control_signal: schedule/horizon length mismatch");
            sum.add(p[t]);
        }
        sig.c[t] = (sum.value() - target[t]) / (opts.beta * n);
    }
    return sig;
}

namespace detail {

// Separable proximal step with one coupling energy constraint:
//   min sum c(t) p(t) + sum (p(t) - prev(t))^2
//   s.t. 0 <= p(t) <= rate inside the window, p = 0 outside,
//        R <= sum p(t) dt <= R_max.
// Per step p(t) = clip(prev(t) + (mu dt - c(t)) / 2, 0, rate); mu is found by
// monotone bisection on the energy sum, then one linear polish so the active
// energy bound holds to machine precision.
struct WindowProblem {
    int begin = 0; // remaining-horizon indices [begin, end)
    int end = 0;
    double rate = 0.0;
    double dt = 1.0;
    double r_min = 0.0;
    double r_max = 0.0;
};

inline double window_fill(const std::vector<double>& c, const std::vector<double>& prev,
                          const WindowProblem& w, double mu, std::vector<double>& out) {
    double sum = 0.0;
    for (int t = w.begin; t < w.end; ++t) {
        const double p = std::clamp(prev[t] + 0.5 * (mu * w.dt - c[t]), 0.0, w.rate);
        out[t] = p;
        sum += p * w.dt;
    }
    return sum;
}

inline void solve_window(const std::vector<double>& c, const std::vector<double>& prev,
                         const WindowProblem& w, std::vector<double>& out) {
    const double r_min = std::min(w.r_min, w.r_max);
    double sum0 = window_fill(c, prev, w, 0.0, out);
    if (sum0 >= r_min && sum0 <= w.r_max) return;
    const double want = sum0 < r_min ? r_min : w.r_max;

    const double capacity = w.rate * (w.end - w.begin) * w.dt;
    if (want <= 0.0) {
        for (int t = w.begin; t < w.end; ++t) out[t] = 0.0;
        return;
    }
    if (want >= capacity) {
        for (int t = w.begin; t < w.end; ++t) out[t] = w.rate;
        return;
    }

    double lo = 0.0, hi = 0.0;
    for (int t = w.begin; t < w.end; ++t) {
        lo = std::min(lo, (c[t] - 2.0 * prev[t]) / w.dt);
        hi = std::max(hi, (c[t] + 2.0 * (w.rate - prev[t])) / w.dt);
    }
    lo -= 1.0;
    hi += 1.0;
    for (int it = 0; it < 48; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (window_fill(c, prev, w, mid, out) < want)
            lo = mid;
        else
            hi = mid;
    }
    double sum = window_fill(c, prev, w, hi, out);

    // linear polish on the unclipped entries
    int free_count = 0;
    for (int t = w.begin; t < w.end; ++t)
        if (out[t] > 0.0 && out[t] < w.rate) ++free_count;
    if (free_count > 0) {
        const double bump = (want - sum) / (free_count * w.dt);
        for (int t = w.begin; t < w.end; ++t)
            if (out[t] > 0.0 && out[t] < w.rate) out[t] = std::clamp(out[t] + bump, 0.0, w.rate);
    }
}

inline WindowProblem window_for(const EVState& ev, int now, const TimeGrid& grid) {
    WindowProblem w;
    w.dt = grid.step_hours;
    w.rate = ev.session.rate_limit();
    w.begin = std::max(ev.session.t_start, now) - now;
    w.end = std::min(ev.estimated_end(), grid.steps) - now;
    if (w.end < w.begin) w.end = w.begin;
    w.r_min = std::max(0.0, ev.e_hat - ev.delivered);
    w.r_max = std::max(0.0, ev.session.battery_cap - ev.delivered);
    return w;
}

} // namespace detail

/// One EV's best response to the broadcast signal: proximal minimizer of
/// signal cost plus distance to its previous schedule, under its own power
/// window and energy band.
inline std::vector<double> ev_best_response(const ControlSignal& c,
                                            const std::vector<double>& prev, const EVState& ev,
                                            int now, const TimeGrid& grid) {
    if (ev.status != EvStatus::Active)
        throw std::logic_error("ev_best_response: EV " + std::to_string(ev.session.id) +
                               " is not active");
    const std::size_t horizon = c.c.size();
    if (prev.size() != horizon)
        throw std::invalid_argument("ev_best_response: schedule/signal length mismatch");
    std::vector<double> out(horizon, 0.0);
    const auto w = detail::window_for(ev, now, grid);
    if (w.end <= w.begin) return out; // empty window; shortfall handled by the caller
    detail::solve_window(c.c, prev, w, out);
    return out;
}

struct ConsensusResult {
    std::vector<std::vector<double>> schedules;
    ControlSignal signal;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

/// Synchronous best-response sweeps against a shared signal until the signal
/// stops moving. EVs are processed in the caller-supplied order but each
/// sweep responds to the same signal, so the result is order-invariant.
inline ConsensusResult run_consensus(const std::vector<const EVState*>& active,
                                     const std::vector<double>& target,
                                     const ConsensusOptions& opts,
                                     std::vector<std::vector<double>> init, int now,
                                     const TimeGrid& grid) {
    if (active.empty()) throw std::invalid_argument("run_consensus: no active EVs");
    if (init.size() != active.size())
        throw std::invalid_argument("run_consensus: init schedule count mismatch");

    ConsensusOptions o = opts;
    if (o.participants <= 0) o.participants = static_cast<int>(active.size());

    ConsensusResult res;
    res.schedules = std::move(init);
    auto sig = control_signal(res.schedules, target, o, 0);
    res.signal = *sig;

    std::vector<std::vector<double>> next(res.schedules.size());
    double err = std::numeric_limits<double>::infinity();
    int k = 0;
    while (k < o.k_max) {
        for (std::size_t n = 0; n < active.size(); ++n)
            next[n] = ev_best_response(res.signal, res.schedules[n], *active[n], now, grid);
        res.schedules.swap(next);
        ++k;
        auto sig_next = control_signal(res.schedules, target, o, k);
        err = 0.0;
        for (std::size_t t = 0; t < target.size(); ++t)
            err = std::max(err, std::abs(sig_next->c[t] - res.signal.c[t]));
        res.signal = *sig_next;
        if (err <= o.err_tol) break;
    }
    res.iterations = k;
    res.residual = err;
    res.converged = err <= o.err_tol;
    return res;
}

/// Estimator update for one active EV. `oracle` reveals the hidden truth;
/// `declared-persistence` sticks to declared values, extends the stay while
/// the EV overstays its estimate, and repairs the demand estimate down to
/// what the remaining estimated window can deliver.
struct EstimateUpdate {
    int d_hat;
    double e_hat;
};

inline EstimateUpdate update_estimates(const EVState& ev, int now, EstimatorPolicy policy,
                                       const TimeGrid& grid, EventLog* log = nullptr) {
    if (ev.status != EvStatus::Active)
        throw std::logic_error("update_estimates: EV " + std::to_string(ev.session.id) +
                               " is not active");
    EstimateUpdate u{ev.d_hat, ev.e_hat};
    if (policy == EstimatorPolicy::Oracle) {
        u.d_hat = ev.realized_duration;
        u.e_hat = ev.realized_energy;
        return u;
    }
    const int elapsed = now - ev.session.t_start;
    u.d_hat = ev.d_hat;
    if (elapsed >= u.d_hat) {
        u.d_hat = elapsed + 1;
        if (log)
            log->add(now, "estimate_extend", ev.session.id,
                     {{"d_hat_steps", u.d_hat}});
    }
    u.e_hat = ev.session.energy_req;
    const int remaining = std::min(ev.session.t_start + u.d_hat, grid.steps) - now;
    const double deliverable =
        ev.delivered + ev.session.rate_limit() * std::max(0, remaining) * grid.step_hours;
    const double cap = std::min(deliverable, ev.session.battery_cap);
    if (u.e_hat > cap) {
        if (log && std::abs(cap - ev.e_hat) > 1e-12)
            log->add(now, "estimate_repair", ev.session.id,
                     {{"declared_kwh", u.e_hat}, {"repaired_kwh", cap}});
        u.e_hat = cap;
    }
    return u;
}

enum class InitPolicy { Asap, SeededRandom };

inline InitPolicy init_from_name(const std::string& name) {
    if (name == "asap") return InitPolicy::Asap;
    if (name == "random") return InitPolicy::SeededRandom;
    throw std::invalid_argument("unknown consensus init policy '" + name + "'");
}

struct SimOptions {
    ConsensusOptions consensus;
    EstimatorPolicy estimator = EstimatorPolicy::DeclaredPersistence;
    InitPolicy init = InitPolicy::Asap;
    bool perfect_forecast = true;
    double forecast_sigma = 0.0; // relative noise on real-time forecasts when not perfect
    std::uint64_t seed = 0;
};

/// Fully assembled second-stage scenario: declared sessions plus the hidden
/// realized behaviour, and forecast vs realized community profiles.
struct SimScenario {
    TimeGrid grid;
    std::vector<ChargingSession> sessions;
    std::vector<int> realized_duration;    // aligned with sessions
    std::vector<double> realized_energy;   // aligned with sessions
    std::vector<double> forecast_baseload; // B-hat used by the day-ahead stage
    std::vector<double> forecast_solar;
    std::vector<double> realized_baseload;
    std::vector<double> realized_solar;
    std::vector<long long> dayahead_session_ids; // empty means "unknown"

    void validate() const {
        const auto T = static_cast<std::size_t>(grid.steps);
        if (forecast_baseload.size() != T || forecast_solar.size() != T ||
            realized_baseload.size() != T || realized_solar.size() != T)
            throw std::invalid_argument("SimScenario: profile lengths must equal grid steps");
        if (realized_duration.size() != sessions.size() ||
            realized_energy.size() != sessions.size())
            throw std::invalid_argument("SimScenario: realized arrays must align with sessions");
    }
};

struct TraceStep {
    int step = 0;
    double baseload_kw = 0.0;
    double solar_kw = 0.0;
    double ev_kw = 0.0;
    double target_kw = 0.0;
    int iterations = 0;
    double residual = 0.0;
};

struct TraceEv {
    long long id = 0;
    int arrive = 0;
    int depart = 0;
    double delivered_kwh = 0.0;
    double required_kwh = 0.0;    // realized demand
    double deliverable_kwh = 0.0; // min(required, rate * realized stay)
    bool shortfall = false;
};

struct SimulationTrace {
    TimeGrid grid;
    std::vector<TraceStep> steps;
    std::vector<TraceEv> per_ev;
    EventLog events;
    std::vector<double> uncontrolled_ev_kw; // as-soon-as-possible counterfactual
};

namespace detail {

inline std::vector<double> asap_schedule(const EVState& ev, int now, const TimeGrid& grid,
                                         std::size_t horizon) {
    std::vector<double> p(horizon, 0.0);
    const auto w = window_for(ev, now, grid);
    double remaining = std::max(0.0, std::min(w.r_min, w.rate * (w.end - w.begin) * w.dt));
    for (int t = w.begin; t < w.end && remaining > 0.0; ++t) {
        const double take = std::min(w.rate, remaining / w.dt);
        p[t] = take;
        remaining -= take * w.dt;
    }
    return p;
}

inline std::vector<double> random_schedule(const EVState& ev, int now, const TimeGrid& grid,
                                           std::size_t horizon, Rng& rng) {
    std::vector<double> draw(horizon, 0.0);
    const auto w = window_for(ev, now, grid);
    for (int t = w.begin; t < w.end; ++t) draw[t] = rng.uniform(0.0, w.rate);
    // project the draw onto the EV's feasible set (prox with zero signal)
    std::vector<double> out(horizon, 0.0);
    if (w.end > w.begin) {
        const std::vector<double> zero_c(horizon, 0.0);
        solve_window(zero_c, draw, w, out);
    }
    return out;
}

// As-soon-as-possible charging of the realized sessions; the uncontrolled
// baseline used for ramp/cost comparisons.
inline std::vector<double> uncontrolled_profile(const SimScenario& sc,
                                                const std::vector<std::size_t>& order) {
    std::vector<KahanSum> sums(sc.grid.steps);
    for (std::size_t idx : order) {
        const auto& s = sc.sessions[idx];
        const double rate = s.rate_limit();
        double remaining = std::min(sc.realized_energy[idx],
                                    rate * sc.realized_duration[idx] * sc.grid.step_hours);
        const int end = std::min(s.t_start + sc.realized_duration[idx], sc.grid.steps);
        for (int t = s.t_start; t < end && remaining > 0.0; ++t) {
            const double take = std::min(rate, remaining / sc.grid.step_hours);
            sums[t].add(take);
            remaining -= take * sc.grid.step_hours;
        }
    }
    std::vector<double> out(sc.grid.steps);
    for (int t = 0; t < sc.grid.steps; ++t) out[t] = sums[t].value();
    return out;
}

} // namespace detail

/// Receding-horizon loop: at each step refresh forecasts and estimates,
/// reach consensus over the remaining horizon, implement only the first
/// element of each schedule, credit the delivered energy, and log anomalies
/// as trace events rather than aborting.
inline SimulationTrace simulate(const SimScenario& scenario,
                                const std::vector<double>& dayahead_p_hat,
                                const SimOptions& opts) {
    scenario.validate();
    const TimeGrid& grid = scenario.grid;
    const int T = grid.steps;
    if (dayahead_p_hat.size() != static_cast<std::size_t>(T))
        throw std::invalid_argument("simulate: day-ahead schedule length mismatch with grid");

    SimulationTrace trace;
    trace.grid = grid;

    // canonical processing order: ascending session id
    std::vector<std::size_t> order(scenario.sessions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scenario.sessions[a].id < scenario.sessions[b].id;
    });

    trace.uncontrolled_ev_kw = detail::uncontrolled_profile(scenario, order);

    std::unordered_set<long long> dayahead_ids(scenario.dayahead_session_ids.begin(),
                                               scenario.dayahead_session_ids.end());

    std::vector<EVState> evs(scenario.sessions.size());
    for (std::size_t i = 0; i < scenario.sessions.size(); ++i) {
        EVState& ev = evs[i];
        ev.session = scenario.sessions[i];
        ev.realized_duration = scenario.realized_duration[i];
        ev.realized_energy = scenario.realized_energy[i];
        ev.d_hat = ev.session.duration;
        ev.e_hat = ev.session.energy_req;
        ev.status = EvStatus::Pending;
    }

    const auto retire = [&](EVState& ev, int depart_step) {
        ev.status = EvStatus::Departed;
        TraceEv row;
        row.id = ev.session.id;
        row.arrive = ev.session.t_start;
        row.depart = depart_step;
        row.delivered_kwh = ev.delivered;
        row.required_kwh = ev.realized_energy;
        row.deliverable_kwh =
            std::min(ev.realized_energy,
                     ev.session.rate_limit() * ev.realized_duration * grid.step_hours);
        row.shortfall = row.delivered_kwh < row.deliverable_kwh - 1e-6;
        if (row.shortfall)
            trace.events.add(depart_step, "shortfall", ev.session.id,
                             {{"delivered_kwh", row.delivered_kwh},
                              {"deliverable_kwh", row.deliverable_kwh}});
        trace.per_ev.push_back(row);
    };

    for (int now = 0; now < T; ++now) {
        const std::size_t horizon = static_cast<std::size_t>(T - now);

        // real-time forecast refresh
        std::vector<double> rt_base(horizon), rt_solar(horizon);
        for (std::size_t h = 0; h < horizon; ++h) {
            rt_base[h] = scenario.realized_baseload[now + h];
            rt_solar[h] = scenario.realized_solar[now + h];
        }
        if (!opts.perfect_forecast && opts.forecast_sigma > 0.0) {
            Rng rng(mix_seed(opts.seed, 0xF0CA57ULL, static_cast<std::uint64_t>(now)));
            for (std::size_t h = 0; h < horizon; ++h) {
                rt_base[h] *= 1.0 + rng.normal(0.0, opts.forecast_sigma);
                rt_solar[h] = std::max(0.0, rt_solar[h] * (1.0 + rng.normal(0.0, opts.forecast_sigma)));
            }
        }

        // departures then arrivals, in canonical order
        for (std::size_t idx : order) {
            EVState& ev = evs[idx];
            if (ev.status == EvStatus::Active && ev.realized_end() <= now) retire(ev, now);
        }
        for (std::size_t idx : order) {
            EVState& ev = evs[idx];
            if (ev.status == EvStatus::Pending && ev.session.t_start <= now &&
                now < ev.realized_end()) {
                ev.status = EvStatus::Active;
                if (!dayahead_ids.empty() && !dayahead_ids.count(ev.session.id))
                    trace.events.add(now, "late_arrival", ev.session.id,
                                     {{"start_step", ev.session.t_start}});
            }
        }

        std::vector<std::size_t> active_idx;
        for (std::size_t idx : order)
            if (evs[idx].status == EvStatus::Active) active_idx.push_back(idx);

        for (std::size_t idx : active_idx) {
            EVState& ev = evs[idx];
            const auto u = update_estimates(ev, now, opts.estimator, grid, &trace.events);
            ev.d_hat = u.d_hat;
            ev.e_hat = u.e_hat;
        }

        // remaining-horizon target with forecast-delta correction
        std::vector<double> target(horizon);
        for (std::size_t h = 0; h < horizon; ++h) {
            const int t = now + static_cast<int>(h);
            target[h] = dayahead_p_hat[t] +
                        (scenario.forecast_baseload[t] - scenario.forecast_solar[t]) -
                        (rt_base[h] - rt_solar[h]);
        }

        TraceStep row;
        row.step = now;
        row.baseload_kw = scenario.realized_baseload[now];
        row.solar_kw = scenario.realized_solar[now];
        row.target_kw = target[0];

        if (!active_idx.empty()) {
            std::vector<const EVState*> active;
            std::vector<std::vector<double>> init;
            active.reserve(active_idx.size());
            init.reserve(active_idx.size());
            for (std::size_t idx : active_idx) {
                active.push_back(&evs[idx]);
                if (opts.init == InitPolicy::Asap) {
                    init.push_back(detail::asap_schedule(evs[idx], now, grid, horizon));
                } else {
                    Rng rng(mix_seed(opts.seed, 0x1217ULL,
                                     static_cast<std::uint64_t>(evs[idx].session.id) * 131 + now));
                    init.push_back(detail::random_schedule(evs[idx], now, grid, horizon, rng));
                }
            }
            auto res = run_consensus(active, target, opts.consensus, std::move(init), now, grid);
            if (!res.converged)
                trace.events.add(now, "non_convergence", -1,
                                 {{"iterations", res.iterations}, {"residual", res.residual}});
            row.iterations = res.iterations;
            row.residual = res.residual;

            KahanSum total;
            for (std::size_t n = 0; n < active_idx.size(); ++n) {
                EVState& ev = evs[active_idx[n]];
                const double p = res.schedules[n].empty() ? 0.0 : res.schedules[n][0];
                ev.delivered += p * grid.step_hours;
                ev.schedule = std::move(res.schedules[n]);
                total.add(p);
            }
            row.ev_kw = total.value();
        }

        trace.steps.push_back(row);
    }

    // horizon end: everyone still plugged departs at T
    for (std::size_t idx : order) {
        EVState& ev = evs[idx];
        if (ev.status == EvStatus::Active)
            retire(ev, T);
        else if (ev.status == EvStatus::Pending)
            retire(ev, ev.session.t_start); // never admitted
    }

    return trace;
}

} // namespace evsched
