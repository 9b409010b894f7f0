// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "spde/error.hpp"
#include "spde/matrix.hpp"

namespace spde {

/// Uniform space-time lattice with one common step for both axes.
///
/// The Brownian sheet behind the diagonal noise W(t,x) = B(t, t+x) has to be
/// known up to x = t_max + x_max, so the grid also describes that extended
/// sheet lattice. With a single step every diagonal point (t_i, t_i + x_j) is
/// itself a lattice node.
struct GridSpec {
    double t_max = 0.0;
    double x_max = 0.0;
    double h = 0.0;
    std::size_t n_t = 0;
    std::size_t n_x = 0;
    double sheet_x_max = 0.0;

    [[nodiscard]] double t(std::size_t i) const noexcept { return static_cast<double>(i) * h; }
    [[nodiscard]] double x(std::size_t j) const noexcept { return static_cast<double>(j) * h; }

    /// Number of spatial cells on the sheet lattice (x up to t_max + x_max).
    [[nodiscard]] std::size_t n_sheet_x() const noexcept { return n_t + n_x; }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

namespace detail {

inline std::size_t divide_axis(double extent, double h, const char* axis) {
    const double ratio = extent / h;
    const double n = std::round(ratio);
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, extent);
    if (n < 1.0 || std::abs(n * h - extent) > tol) {
        std::ostringstream msg;
        msg << "step h=" << h << " does not divide " << axis << "=" << extent;
        throw Error(ErrorKind::invalid_argument, msg.str());
    }
    return static_cast<std::size_t>(n);
}

}  // namespace detail

/// Validated lattice over [0, t_max] x [0, x_max] with step h.
[[nodiscard]] inline GridSpec make_grid(double t_max, double x_max, double h) {
    if (!(t_max > 0.0) || !(x_max > 0.0) || !(h > 0.0) || !std::isfinite(t_max) ||
        !std::isfinite(x_max) || !std::isfinite(h)) {
        std::ostringstream msg;
        msg << "grid parameters must be positive and finite (t_max=" << t_max << ", x_max=" << x_max
            << ", h=" << h << ")";
        throw Error(ErrorKind::invalid_argument, msg.str());
    }
    GridSpec g;
    g.t_max = t_max;
    g.x_max = x_max;
    g.h = h;
    g.n_t = detail::divide_axis(t_max, h, "t_max");
    g.n_x = detail::divide_axis(x_max, h, "x_max");
    g.sheet_x_max = t_max + x_max;
    return g;
}

/// Grid with step h * factor over the same rectangle; every coarse node is a
/// fine node.
[[nodiscard]] inline GridSpec coarsen(const GridSpec& fine, std::size_t factor) {
    if (factor == 0 || fine.n_t % factor != 0 || fine.n_x % factor != 0) {
        throw Error(ErrorKind::invalid_argument,
                    "coarsening factor " + std::to_string(factor) + " does not divide the lattice");
    }
    GridSpec g = fine;
    g.h = fine.h * static_cast<double>(factor);
    g.n_t = fine.n_t / factor;
    g.n_x = fine.n_x / factor;
    return g;
}

/// Real field sampled on every node of a grid, values(i, j) <-> (t_i, x_j).
class ScalarField {
public:
    ScalarField() = default;

    explicit ScalarField(const GridSpec& grid, double fill = 0.0)
        : grid_(grid), values_(grid.n_t + 1, grid.n_x + 1, fill) {}

    ScalarField(const GridSpec& grid, Matrix values) : grid_(grid), values_(std::move(values)) {
        if (values_.rows() != grid_.n_t + 1 || values_.cols() != grid_.n_x + 1) {
            throw Error(ErrorKind::grid_mismatch, "field dimensions do not match the grid");
        }
        for (double v : values_.data()) {
            if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "field value is not finite");
        }
    }

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] Matrix& values() noexcept { return values_; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return values_(i, j); }
    double& operator()(std::size_t i, std::size_t j) noexcept { return values_(i, j); }

    friend bool operator==(const ScalarField&, const ScalarField&) = default;

private:
    GridSpec grid_;
    Matrix values_;
};

using PlaneFunction = std::function<double(double t, double x)>;

[[nodiscard]] inline ScalarField sample_field(const GridSpec& grid, const PlaneFunction& f) {
    ScalarField out(grid);
    for (std::size_t i = 0; i <= grid.n_t; ++i) {
        for (std::size_t j = 0; j <= grid.n_x; ++j) out(i, j) = f(grid.t(i), grid.x(j));
    }
    return out;
}

/// Lattice restriction: keep every factor-th node in both directions.
[[nodiscard]] inline ScalarField restrict_field(const ScalarField& fine, std::size_t factor) {
    const GridSpec coarse = coarsen(fine.grid(), factor);
    ScalarField out(coarse);
    for (std::size_t i = 0; i <= coarse.n_t; ++i) {
        for (std::size_t j = 0; j <= coarse.n_x; ++j) out(i, j) = fine(i * factor, j * factor);
    }
    return out;
}

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!(a == b)) throw Error(ErrorKind::grid_mismatch, std::string("grid mismatch: ") + what);
}

/// Lattice index of a coordinate, or throws when the coordinate is off-lattice.
[[nodiscard]] inline std::size_t lattice_index(double coord, double h, std::size_t max_index,
                                               const char* what) {
    const double ratio = coord / h;
    const double n = std::round(ratio);
    if (n < 0.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, std::abs(ratio)) ||
        static_cast<std::size_t>(n) > max_index) {
        std::ostringstream msg;
        msg << what << "=" << coord << " is not a lattice coordinate (h=" << h << ", max index "
            << max_index << ")";
        throw Error(ErrorKind::misaligned, msg.str());
    }
    return static_cast<std::size_t>(n);
}

}  // namespace spde
