#pragma once

#include <stdexcept>
#include <string>

namespace evsched {

/// Discrete scheduling horizon shared by every profile in a run.
/// Power is held constant within a step; the energy credited at step t
/// includes the delivery of step t itself.
struct TimeGrid {
    int steps = 96;           // T
    double step_hours = 0.25; // dt
    std::string origin;       // informational label

    TimeGrid() = default;
    TimeGrid(int steps_, double step_hours_, std::string origin_ = {})
        : steps(steps_), step_hours(step_hours_), origin(std::move(origin_)) {
        if (steps < 2) throw std::invalid_argument("TimeGrid: steps must be >= 2");
        if (!(step_hours > 0.0)) throw std::invalid_argument("TimeGrid: step_hours must be > 0");
    }

    double hours(int t) const { return t * step_hours; }
    double horizon_hours() const { return steps * step_hours; }

    bool operator==(const TimeGrid& o) const {
        return steps == o.steps && step_hours == o.step_hours;
    }
};

} // namespace evsched
