// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "spde/grid.hpp"

namespace spde {

enum class Axis { t, x };

/// Closed rectangle on which a function may be evaluated. Points closer than
/// one step to an edge get second-order one-sided stencils.
struct Domain {
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    double x_lo = -std::numeric_limits<double>::infinity();
    double x_hi = std::numeric_limits<double>::infinity();
};

/// Default step for coefficient partials on a grid of step h.
[[nodiscard]] inline double default_fd_step(double h) noexcept { return std::max(1e-5, h * h); }

[[nodiscard]] inline double central_diff(const PlaneFunction& f, double t, double x, Axis axis,
                                         double h_fd, const Domain& domain = {}) {
    const double p = axis == Axis::t ? t : x;
    const double lo = axis == Axis::t ? domain.t_lo : domain.x_lo;
    const double hi = axis == Axis::t ? domain.t_hi : domain.x_hi;
    auto at = [&](double offset) {
        return axis == Axis::t ? f(t + offset, x) : f(t, x + offset);
    };
    if (p - h_fd < lo) {
        return (-3.0 * at(0.0) + 4.0 * at(h_fd) - at(2.0 * h_fd)) / (2.0 * h_fd);
    }
    if (p + h_fd > hi) {
        return (3.0 * at(0.0) - 4.0 * at(-h_fd) + at(-2.0 * h_fd)) / (2.0 * h_fd);
    }
    return (at(h_fd) - at(-h_fd)) / (2.0 * h_fd);
}

}  // namespace spde
