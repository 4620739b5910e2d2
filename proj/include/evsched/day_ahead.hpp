#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "evsched/envelope.hpp"
#include "evsched/time_grid.hpp"

namespace evsched {

/// First-stage inputs: wholesale price, forecast baseload/solar, ramp weight.
struct DayAheadInput {
    std::vector<double> lambda;   // $/kWh
    std::vector<double> baseload; // kW, forecast
    std::vector<double> solar;    // kW, forecast, >= 0
    double theta = 0.01;          // $/kW^2 per step pair
    TimeGrid grid;

    void validate() const {
        const auto T = static_cast<std::size_t>(grid.steps);
        if (lambda.size() != T || baseload.size() != T || solar.size() != T)
            throw std::invalid_argument("DayAheadInput: series lengths must equal grid steps");
        if (theta < 0.0) throw std::invalid_argument("DayAheadInput: theta must be >= 0");
        for (std::size_t t = 0; t < T; ++t) {
            if (!std::isfinite(lambda[t]) || !std::isfinite(baseload[t]) || !std::isfinite(solar[t]))
                throw std::invalid_argument("DayAheadInput: non-finite entry at step " +
                                            std::to_string(t));
            if (solar[t] < 0.0)
                throw std::invalid_argument("DayAheadInput: negative solar at step " +
                                            std::to_string(t));
        }
    }
};

struct ObjectiveTerms {
    double cost_term = 0.0; // $
    double ramp_term = 0.0; // theta-weighted squared ramps
    double objective = 0.0;
};

/// Wholesale cost of the netload plus the quadratic ramping penalty.
/// Cost runs over the full horizon; ramps over the T-1 consecutive pairs.
inline ObjectiveTerms day_ahead_objective(const std::vector<double>& P,
                                          const DayAheadInput& in) {
    in.validate();
    if (P.size() != static_cast<std::size_t>(in.grid.steps))
        throw std::invalid_argument("day_ahead_objective: profile length mismatch");
    ObjectiveTerms terms;
    const int T = in.grid.steps;
    double prev_load = 0.0;
    for (int t = 0; t < T; ++t) {
        const double load = in.baseload[t] - in.solar[t] + P[t];
        terms.cost_term += in.lambda[t] * load * in.grid.step_hours;
        if (t > 0) {
            const double ramp = load - prev_load;
            terms.ramp_term += ramp * ramp;
        }
        prev_load = load;
    }
    terms.ramp_term *= in.theta;
    terms.objective = terms.cost_term + terms.ramp_term;
    return terms;
}

struct SolverOptions {
    double feas_tol = -1.0; // kW/kWh; < 0 means 1e-6 * max(1, max P_plus)
    double opt_tol = 1e-6;  // projected-gradient norm, relative to max(1, max P_plus)
    int max_iters = 100000;
    int dykstra_max_cycles = 5000;
    double dykstra_tol = 1e-9; // fixed-point tolerance, relative to max(1, max P_plus)
};

struct SolverStats {
    int iterations = 0;
    double feas_residual = 0.0;
    double opt_residual = 0.0;
    bool converged = false;
};

struct DayAheadSchedule {
    std::vector<double> P_hat; // kW
    double cost_term = 0.0;
    double ramp_term = 0.0;
    double objective = 0.0;
    SolverStats stats;
};

class DayAheadError : public std::runtime_error {
public:
    DayAheadError(const std::string& what, DayAheadSchedule best)
        : std::runtime_error(what), best_iterate(std::move(best)) {}
    DayAheadSchedule best_iterate;
};

// Projection onto {0 <= P <= P_plus} intersected with the cumulative band
// {E_minus <= cumsum(P) * dt <= E_plus}, by cyclic Dykstra iterations over
// the box and one slab per prefix sum. Corrections restart at zero on every
// call, as Dykstra requires; the iterate itself warm-starts from the input.
class EnvelopeProjector {
public:
    EnvelopeProjector(const AggregateEnvelope& agg, const TimeGrid& grid,
                      const SolverOptions& opts)
        : agg_(agg), dt_(grid.step_hours), T_(grid.steps), opts_(opts) {
        double scale = 1.0;
        for (double p : agg.P_plus) scale = std::max(scale, p);
        fp_tol_ = opts.dykstra_tol * scale;
        q_box_.resize(T_);
        q_slab_.resize(static_cast<std::size_t>(T_) * T_);
        y_.resize(T_);
        prev_.resize(T_);
    }

    void project(std::vector<double>& x, double tol_override = -1.0) const {
        const double tol = tol_override > 0.0 ? tol_override : fp_tol_;
        std::fill(q_box_.begin(), q_box_.end(), 0.0);
        std::fill(q_slab_.begin(), q_slab_.end(), 0.0);
        for (int cycle = 0; cycle < opts_.dykstra_max_cycles; ++cycle) {
            prev_ = x;
            // box
            for (int t = 0; t < T_; ++t) {
                const double y = x[t] + q_box_[t];
                const double p = std::clamp(y, 0.0, agg_.P_plus[t]);
                q_box_[t] = y - p;
                x[t] = p;
            }
            // prefix-sum slabs, one per step
            for (int t = 0; t < T_; ++t) {
                double* q = &q_slab_[static_cast<std::size_t>(t) * T_];
                double v = 0.0;
                for (int u = 0; u <= t; ++u) {
                    y_[u] = x[u] + q[u];
                    v += y_[u];
                }
                v *= dt_;
                double shift = 0.0;
                if (v < agg_.E_minus[t])
                    shift = (agg_.E_minus[t] - v) / (dt_ * (t + 1));
                else if (v > agg_.E_plus[t])
                    shift = (agg_.E_plus[t] - v) / (dt_ * (t + 1));
                for (int u = 0; u <= t; ++u) {
                    const double p = y_[u] + shift;
                    q[u] = y_[u] - p;
                    x[u] = p;
                }
            }
            double delta = 0.0;
            for (int t = 0; t < T_; ++t) delta = std::max(delta, std::abs(x[t] - prev_[t]));
            // the iterate can repeat across cycles while the corrections are
            // still relocating mass between sets; stop only once it is also
            // feasible, or the break fires on a non-solution
            if (delta <= tol && violation(x) <= 16 * tol) break;
        }
        // snap box round-off so the strict power bounds hold exactly
        for (int t = 0; t < T_; ++t) x[t] = std::clamp(x[t], 0.0, agg_.P_plus[t]);
    }

    double violation(const std::vector<double>& x) const {
        double worst = 0.0;
        double cum = 0.0;
        for (int t = 0; t < T_; ++t) {
            worst = std::max(worst, -x[t]);
            worst = std::max(worst, x[t] - agg_.P_plus[t]);
            cum += x[t] * dt_;
            worst = std::max(worst, agg_.E_minus[t] - cum);
            worst = std::max(worst, cum - agg_.E_plus[t]);
        }
        return worst;
    }

private:
    const AggregateEnvelope& agg_;
    double dt_;
    int T_;
    SolverOptions opts_;
    double fp_tol_;
    mutable std::vector<double> q_box_, q_slab_, y_, prev_;
};

namespace detail {

// grad f = lambda * dt + 2 * theta * D^T D (base + P)
inline void day_ahead_gradient(const std::vector<double>& P, const DayAheadInput& in,
                               const std::vector<double>& net_base, std::vector<double>& g) {
    const int T = in.grid.steps;
    g.resize(T);
    for (int t = 0; t < T; ++t) {
        const double L = net_base[t] + P[t];
        double second = 0.0;
        if (t > 0) second += L - (net_base[t - 1] + P[t - 1]);
        if (t < T - 1) second += L - (net_base[t + 1] + P[t + 1]);
        g[t] = in.lambda[t] * in.grid.step_hours + 2.0 * in.theta * second;
    }
}

inline double linf_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace detail

/// Accelerated projected gradient on the first-stage objective over the
/// aggregate flexibility set. Step size comes from the Lipschitz bound of
/// the ramp quadratic (||D^T D|| <= 4, hence 8*theta) with a linear-term
/// floor, guarded by backtracking; momentum restarts on objective increase.
inline DayAheadSchedule solve_day_ahead(const DayAheadInput& in, const AggregateEnvelope& agg,
                                        const SolverOptions& opts = {}) {
    in.validate();
    const int T = in.grid.steps;
    if (agg.size() != static_cast<std::size_t>(T))
        throw std::invalid_argument("solve_day_ahead: envelope length mismatch");

    double p_scale = 1.0;
    for (double p : agg.P_plus) p_scale = std::max(p_scale, p);
    const double feas_tol = opts.feas_tol > 0.0 ? opts.feas_tol : 1e-6 * p_scale;
    const double opt_thresh = opts.opt_tol * p_scale;

    std::vector<double> net_base(T);
    for (int t = 0; t < T; ++t) net_base[t] = in.baseload[t] - in.solar[t];

    const auto objective = [&](const std::vector<double>& P) {
        return day_ahead_objective(P, in).objective;
    };

    EnvelopeProjector projector(agg, in.grid, opts);

    std::vector<double> x(T, 0.0);
    projector.project(x);
    std::vector<double> x_prev = x, y = x, g(T), cand(T);

    // Lipschitz estimate with a floor so the linear-only case still steps.
    double g_scale = 0.0;
    detail::day_ahead_gradient(x, in, net_base, g);
    for (double v : g) g_scale = std::max(g_scale, std::abs(v));
    double lip = 8.0 * in.theta + std::max(1e-12, g_scale / p_scale);

    const double s_res = 1.0 / (1.0 + 8.0 * in.theta); // fixed step for the residual metric
    const auto residual = [&](const std::vector<double>& P) {
        detail::day_ahead_gradient(P, in, net_base, g);
        cand = P;
        for (int t = 0; t < T; ++t) cand[t] -= s_res * g[t];
        projector.project(cand);
        return detail::linf_diff(P, cand) / s_res;
    };

    double fx = objective(x);
    double momentum = 1.0;
    SolverStats stats;
    int iter = 0;
    bool done = false;
    for (; iter < opts.max_iters && !done; ++iter) {
        detail::day_ahead_gradient(y, in, net_base, g);
        double step = 1.0 / lip;
        for (;;) {
            for (int t = 0; t < T; ++t) cand[t] = y[t] - step * g[t];
            projector.project(cand);
            // quadratic upper-bound check around y
            double fy = objective(y);
            double lin = 0.0, sq = 0.0;
            for (int t = 0; t < T; ++t) {
                const double d = cand[t] - y[t];
                lin += g[t] * d;
                sq += d * d;
            }
            if (objective(cand) <= fy + lin + 0.5 * lip * sq + 1e-12 * (1.0 + std::abs(fy)))
                break;
            lip *= 2.0;
            step = 1.0 / lip;
        }

        const double f_cand = objective(cand);
        if (f_cand > fx) {
            // restart momentum from the best point
            momentum = 1.0;
            y = x;
        } else {
            const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            const double beta = (momentum - 1.0) / m_next;
            x_prev = x;
            x = cand;
            fx = f_cand;
            for (int t = 0; t < T; ++t) y[t] = x[t] + beta * (x[t] - x_prev[t]);
            momentum = m_next;
        }

        if ((iter + 1) % 25 == 0 || iter + 1 == opts.max_iters) {
            const double r = residual(x);
            if (r <= opt_thresh) {
                stats.opt_residual = r;
                done = true;
            }
        }
    }

    // final feasibility polish and bookkeeping; the exact clamp keeps the
    // strict power bounds free of projection round-off
    projector.project(x, 1e-12 * p_scale);
    for (int t = 0; t < T; ++t) x[t] = std::clamp(x[t], 0.0, agg.P_plus[t]);
    stats.iterations = iter;
    if (!done) stats.opt_residual = residual(x);
    const auto verdict = check_feasible(x, agg, in.grid, 0.0);
    double worst = 0.0;
    for (const auto& v : verdict.violations) worst = std::max(worst, v.magnitude);
    stats.feas_residual = worst;
    stats.converged = done && worst <= feas_tol;

    DayAheadSchedule sched;
    sched.P_hat = x;
    const auto terms = day_ahead_objective(x, in);
    sched.cost_term = terms.cost_term;
    sched.ramp_term = terms.ramp_term;
    sched.objective = terms.objective;
    sched.stats = stats;

    if (!stats.converged)
        throw DayAheadError("solve_day_ahead: no convergence in " +
                                std::to_string(opts.max_iters) + " iterations (opt residual " +
                                std::to_string(stats.opt_residual) + ", feas residual " +
                                std::to_string(stats.feas_residual) + ")",
                            sched);
    return sched;
}

} // namespace evsched
