// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spde/error.hpp"
#include "spde/grid.hpp"

namespace spde {

/// Rule for cumulative time integrals. Left-point sums are the non-anticipating
/// (Ito) convention and are reserved for stochastic integrands.
enum class TimeRule { trapezoid, left };

/// Trapezoid integral of equally spaced samples.
[[nodiscard]] inline double trapezoid(std::span<const double> f, double h) {
    if (f.size() < 2) return 0.0;
    double sum = 0.5 * (f.front() + f.back());
    for (std::size_t k = 1; k + 1 < f.size(); ++k) sum += f[k];
    return sum * h;
}

/// Cumulative integral at every sample: out[k] = int_0^{k h} f.
[[nodiscard]] inline std::vector<double> integrate_time(std::span<const double> f, double h,
                                                        TimeRule rule = TimeRule::trapezoid) {
    if (f.empty()) throw Error(ErrorKind::invalid_argument, "integrate_time needs a non-empty sequence");
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t k = 1; k < f.size(); ++k) {
        const double step = rule == TimeRule::trapezoid ? 0.5 * (f[k - 1] + f[k]) : f[k - 1];
        out[k] = out[k - 1] + step * h;
    }
    return out;
}

/// Tensor trapezoid rule over the full grid rectangle.
[[nodiscard]] inline double integrate_2d(const ScalarField& f) {
    const auto& g = f.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        const double wt = (i == 0 || i == g.n_t) ? 0.5 : 1.0;
        double row = 0.0;
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            const double wx = (j == 0 || j == g.n_x) ? 0.5 : 1.0;
            row += wx * f(i, j);
        }
        sum += wt * row;
    }
    return sum * g.h * g.h;
}

}  // namespace spde
