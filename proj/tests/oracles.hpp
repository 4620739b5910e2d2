#pragma once

// Independent oracles used by the unit and acceptance suites. Everything
// here recomputes expected values from first principles and stays clear of
// the library's solver code paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include <evsched/rng.hpp>
#include <evsched/session.hpp>
#include <evsched/time_grid.hpp>

namespace oracles {

// ---------------------------------------------------------------------------
// Envelope oracle: literal as-soon-as-possible / as-late-as-possible greedy
// trajectories, accumulated step by step.

inline std::vector<double> asap_cumulative(const evsched::ChargingSession& s,
                                           const evsched::TimeGrid& grid) {
    std::vector<double> cum(grid.steps, 0.0);
    double delivered = 0.0;
    for (int t = 0; t < grid.steps; ++t) {
        if (t >= s.t_start && t < s.t_end()) {
            const double take =
                std::min(s.rate_limit() * grid.step_hours, s.energy_req - delivered);
            delivered += std::max(0.0, take);
        }
        cum[t] = delivered;
    }
    return cum;
}

inline std::vector<double> alap_cumulative(const evsched::ChargingSession& s,
                                           const evsched::TimeGrid& grid) {
    // fill the window backwards at full rate, then accumulate forwards
    std::vector<double> rate(grid.steps, 0.0);
    double remaining = s.energy_req;
    for (int t = s.t_end() - 1; t >= s.t_start && remaining > 0.0; --t) {
        const double take = std::min(s.rate_limit() * grid.step_hours, remaining);
        rate[t] = take;
        remaining -= take;
    }
    std::vector<double> cum(grid.steps, 0.0);
    double acc = 0.0;
    for (int t = 0; t < grid.steps; ++t) {
        acc += rate[t];
        cum[t] = acc;
    }
    return cum;
}

// ---------------------------------------------------------------------------
// Best-response oracle: coarse multiplier sweep bracketing the energy target,
// then bisection refinement on the sweep's own evaluator.

struct BrInstance {
    std::vector<double> c;    // signal over the window
    std::vector<double> prev; // previous schedule over the window
    double rate = 1.0;
    double dt = 1.0;
    double r_min = 0.0;
    double r_max = 0.0;
};

inline std::vector<double> br_profile(const BrInstance& in, double mu) {
    std::vector<double> p(in.c.size());
    for (std::size_t t = 0; t < in.c.size(); ++t)
        p[t] = std::clamp(in.prev[t] + 0.5 * (mu * in.dt - in.c[t]), 0.0, in.rate);
    return p;
}

inline double br_energy(const BrInstance& in, double mu) {
    double s = 0.0;
    for (double v : br_profile(in, mu)) s += v * in.dt;
    return s;
}

inline std::vector<double> best_response_oracle(const BrInstance& in) {
    const double r_min = std::min(in.r_min, in.r_max);
    const double at_zero = br_energy(in, 0.0);
    double want;
    if (at_zero < r_min)
        want = r_min;
    else if (at_zero > in.r_max)
        want = in.r_max;
    else
        return br_profile(in, 0.0);

    const double capacity = in.rate * static_cast<double>(in.c.size()) * in.dt;
    if (want <= 0.0) return br_profile(in, -1e300);
    if (want >= capacity) return std::vector<double>(in.c.size(), in.rate);

    // sweep to bracket
    double lo = 0.0, hi = 0.0;
    for (std::size_t t = 0; t < in.c.size(); ++t) {
        lo = std::min(lo, (in.c[t] - 2.0 * in.prev[t]) / in.dt);
        hi = std::max(hi, (in.c[t] + 2.0 * (in.rate - in.prev[t])) / in.dt);
    }
    lo -= 1.0;
    hi += 1.0;
    const int sweep_points = 4096;
    double bracket_lo = lo, bracket_hi = hi;
    for (int i = 0; i < sweep_points; ++i) {
        const double m = lo + (hi - lo) * i / (sweep_points - 1.0);
        const double e = br_energy(in, m);
        if (e < want)
            bracket_lo = std::max(bracket_lo, m);
        else {
            bracket_hi = m;
            break;
        }
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (bracket_lo + bracket_hi);
        if (br_energy(in, mid) < want)
            bracket_lo = mid;
        else
            bracket_hi = mid;
    }
    auto p = br_profile(in, bracket_hi);
    // distribute the remaining energy gap over interior entries
    double gap = want;
    for (double v : p) gap -= v * in.dt;
    int interior = 0;
    for (double v : p)
        if (v > 0.0 && v < in.rate) ++interior;
    if (interior > 0) {
        const double bump = gap / (interior * in.dt);
        for (double& v : p)
            if (v > 0.0 && v < in.rate) v = std::clamp(v + bump, 0.0, in.rate);
    }
    return p;
}

// objective of the proximal best-response problem; for grid cross-checks
inline double br_objective(const BrInstance& in, const std::vector<double>& p) {
    double obj = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double d = p[t] - in.prev[t];
        obj += in.c[t] * p[t] + d * d;
    }
    return obj;
}

// ---------------------------------------------------------------------------
// Centralized tracking oracle: accelerated projected gradient on
//   min 0.5 * || sum_n p_n - G ||^2
// over per-EV boxes with an energy band, solved to a given residual.

struct TrackEv {
    int win_begin = 0; // horizon indices
    int win_end = 0;
    double rate = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
};

inline void project_track_ev(const TrackEv& ev, double dt, std::vector<double>& p) {
    for (int t = 0; t < static_cast<int>(p.size()); ++t)
        if (t < ev.win_begin || t >= ev.win_end) p[t] = 0.0;
    auto fill = [&](double nu, std::vector<double>& out) {
        double sum = 0.0;
        for (int t = ev.win_begin; t < ev.win_end; ++t) {
            out[t] = std::clamp(p[t] + nu, 0.0, ev.rate);
            sum += out[t] * dt;
        }
        return sum;
    };
    std::vector<double> out = p;
    const double e0 = fill(0.0, out);
    const double r_min = std::min(ev.r_min, ev.r_max);
    double want = 0.0;
    if (e0 < r_min)
        want = r_min;
    else if (e0 > ev.r_max)
        want = ev.r_max;
    else {
        p = out;
        return;
    }
    double lo = -ev.rate - 1.0, hi = ev.rate + 1.0;
    for (int t = ev.win_begin; t < ev.win_end; ++t) {
        lo = std::min(lo, -p[t] - 1.0);
        hi = std::max(hi, ev.rate - p[t] + 1.0);
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (fill(mid, out) < want)
            lo = mid;
        else
            hi = mid;
    }
    fill(hi, out);
    double gap = want;
    for (int t = ev.win_begin; t < ev.win_end; ++t) gap -= out[t] * dt;
    int interior = 0;
    for (int t = ev.win_begin; t < ev.win_end; ++t)
        if (out[t] > 0.0 && out[t] < ev.rate) ++interior;
    if (interior > 0) {
        const double bump = gap / (interior * dt);
        for (int t = ev.win_begin; t < ev.win_end; ++t)
            if (out[t] > 0.0 && out[t] < ev.rate)
                out[t] = std::clamp(out[t] + bump, 0.0, ev.rate);
    }
    p = out;
}

struct TrackSolution {
    std::vector<std::vector<double>> schedules;
    std::vector<double> aggregate;
    double residual = 0.0;
};

inline TrackSolution centralized_tracking_oracle(const std::vector<TrackEv>& evs,
                                                 const std::vector<double>& target, double dt,
                                                 double tol, int max_iters = 200000) {
    const int H = static_cast<int>(target.size());
    const int N = static_cast<int>(evs.size());
    std::vector<std::vector<double>> x(N, std::vector<double>(H, 0.0));
    for (int n = 0; n < N; ++n) project_track_ev(evs[n], dt, x[n]);
    auto agg = [&](const std::vector<std::vector<double>>& p) {
        std::vector<double> a(H, 0.0);
        for (int n = 0; n < N; ++n)
            for (int t = 0; t < H; ++t) a[t] += p[n][t];
        return a;
    };
    const double step = 1.0 / std::max(1, N);
    std::vector<std::vector<double>> y = x, x_prev = x;
    double momentum = 1.0;
    double res = std::numeric_limits<double>::infinity();
    for (int k = 0; k < max_iters; ++k) {
        auto ay = agg(y);
        std::vector<std::vector<double>> nxt(N, std::vector<double>(H, 0.0));
        for (int n = 0; n < N; ++n) {
            for (int t = 0; t < H; ++t) nxt[n][t] = y[n][t] - step * (ay[t] - target[t]);
            project_track_ev(evs[n], dt, nxt[n]);
        }
        // residual: fixed-point gap of the projected gradient map at nxt
        if (k % 20 == 19) {
            auto an = agg(nxt);
            res = 0.0;
            std::vector<double> probe(H);
            for (int n = 0; n < N; ++n) {
                for (int t = 0; t < H; ++t) probe[t] = nxt[n][t] - step * (an[t] - target[t]);
                project_track_ev(evs[n], dt, probe);
                for (int t = 0; t < H; ++t)
                    res = std::max(res, std::abs(probe[t] - nxt[n][t]) / step);
            }
            if (res <= tol) {
                x = nxt;
                break;
            }
        }
        const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = (momentum - 1.0) / m_next;
        for (int n = 0; n < N; ++n)
            for (int t = 0; t < H; ++t) {
                const double xn = nxt[n][t];
                y[n][t] = xn + beta * (xn - x[n][t]);
            }
        x = nxt;
        momentum = m_next;
    }
    TrackSolution sol;
    sol.schedules = x;
    sol.aggregate = agg(x);
    sol.residual = res;
    return sol;
}

// ---------------------------------------------------------------------------
// Day-ahead grid oracle: exact minimum of the first-stage objective over
// power profiles quantized to `level_step` kW, via dynamic programming on
// (step, cumulative energy units, previous level).

struct DayAheadGridInstance {
    std::vector<double> lambda;
    std::vector<double> net_base; // baseload - solar
    double theta = 0.0;
    double dt = 1.0;
    std::vector<double> p_plus;   // kW per step
    std::vector<double> e_minus;  // kWh cumulative bounds
    std::vector<double> e_plus;
    double level_step = 0.1; // kW
};

inline double day_ahead_grid_oracle(const DayAheadGridInstance& in) {
    const int T = static_cast<int>(in.lambda.size());
    const double h = in.level_step;
    std::vector<int> max_level(T);
    int level_cap = 0;
    for (int t = 0; t < T; ++t) {
        max_level[t] = static_cast<int>(std::floor(in.p_plus[t] / h + 1e-9));
        level_cap = std::max(level_cap, max_level[t]);
    }
    int cum_cap = 0;
    for (int t = 0; t < T; ++t) cum_cap += max_level[t];

    const double inf = std::numeric_limits<double>::infinity();
    // value[cum][prev_level]
    std::vector<std::vector<double>> value(cum_cap + 1,
                                           std::vector<double>(level_cap + 1, inf));
    std::vector<std::vector<double>> next_value = value;

    auto cum_ok = [&](int t, long long units) {
        const double e = units * h * in.dt;
        return e >= in.e_minus[t] - 1e-9 && e <= in.e_plus[t] + 1e-9;
    };

    // t = 0
    for (int l = 0; l <= max_level[0]; ++l) {
        if (!cum_ok(0, l)) continue;
        const double load = in.net_base[0] + l * h;
        value[l][l] = in.lambda[0] * load * in.dt;
    }
    for (int t = 1; t < T; ++t) {
        for (auto& row : next_value) std::fill(row.begin(), row.end(), inf);
        for (int cum = 0; cum <= cum_cap; ++cum) {
            for (int prev = 0; prev <= level_cap; ++prev) {
                const double v = value[cum][prev];
                if (v == inf) continue;
                for (int l = 0; l <= max_level[t]; ++l) {
                    const int cum2 = cum + l;
                    if (!cum_ok(t, cum2)) continue;
                    const double load = in.net_base[t] + l * h;
                    const double prev_load = in.net_base[t - 1] + prev * h;
                    const double add = in.lambda[t] * load * in.dt +
                                       in.theta * (load - prev_load) * (load - prev_load);
                    if (v + add < next_value[cum2][l]) next_value[cum2][l] = v + add;
                }
            }
        }
        value.swap(next_value);
    }
    double best = inf;
    for (int cum = 0; cum <= cum_cap; ++cum) {
        if (!cum_ok(T - 1, cum)) continue;
        for (int l = 0; l <= level_cap; ++l) best = std::min(best, value[cum][l]);
    }
    return best;
}

} // namespace oracles
