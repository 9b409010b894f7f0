// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "spde/csv.hpp"
#include "spde/error.hpp"
#include "spde/grid.hpp"
#include "spde/matrix.hpp"
#include "spde/random.hpp"

namespace spde {

/// One realisation of a Brownian sheet on [0, t_max] x [0, t_max + x_max].
///
/// Cell masses xi(i, m) of the Gaussian random measure on
/// [t_i, t_{i+1}] x [x_m, x_{m+1}] are i.i.d. N(0, h^2); B is their 2-D prefix
/// sum, so B(t_i, x_m) is the measure of [0, t_i] x [0, x_m].
class SheetSample {
public:
    SheetSample(const GridSpec& grid, Matrix values, Matrix increments, std::uint64_t seed)
        : grid_(grid), values_(std::move(values)), increments_(std::move(increments)), seed_(seed) {}

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] const Matrix& cell_increments() const noexcept { return increments_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// B(t_i, x_m) on the sheet lattice.
    [[nodiscard]] double operator()(std::size_t i, std::size_t m) const noexcept {
        return values_(i, m);
    }

    void write_csv(std::ostream& os) const { csv::write_lattice(os, values_, grid_.h); }

private:
    GridSpec grid_;
    Matrix values_;
    Matrix increments_;
    std::uint64_t seed_;
};

/// The sheet as a field on [0, t_max] x [0, t_max + x_max].
[[nodiscard]] inline ScalarField as_field(const SheetSample& sheet) {
    GridSpec g = sheet.grid();
    g.x_max = g.sheet_x_max;
    g.n_x = g.n_sheet_x();
    g.sheet_x_max = g.t_max + g.x_max;
    return ScalarField(g, sheet.values());
}

/// Prefix sum of cell masses with B = 0 on both axes.
[[nodiscard]] inline Matrix prefix_sum(const Matrix& cells) {
    Matrix b(cells.rows() + 1, cells.cols() + 1, 0.0);
    for (std::size_t i = 0; i < cells.rows(); ++i) {
        double row_sum = 0.0;
        for (std::size_t m = 0; m < cells.cols(); ++m) {
            row_sum += cells(i, m);
            b(i + 1, m + 1) = b(i, m + 1) + row_sum;
        }
    }
    return b;
}

[[nodiscard]] inline SheetSample sample_sheet(const GridSpec& grid, std::uint64_t seed) {
    Matrix cells(grid.n_t, grid.n_sheet_x());
    NormalStream normal(seed);
    // sd of a cell mass is sqrt(area) = h
    for (double& v : cells.data()) v = grid.h * normal();
    Matrix values = prefix_sum(cells);
    return SheetSample(grid, std::move(values), std::move(cells), seed);
}

/// Same realisation seen on the lattice of step h * factor.
[[nodiscard]] inline SheetSample restrict_sheet(const SheetSample& fine, std::size_t factor) {
    const GridSpec coarse = coarsen(fine.grid(), factor);
    Matrix values(coarse.n_t + 1, coarse.n_sheet_x() + 1);
    for (std::size_t i = 0; i <= coarse.n_t; ++i) {
        for (std::size_t m = 0; m <= coarse.n_sheet_x(); ++m) values(i, m) = fine(i * factor, m * factor);
    }
    Matrix cells(coarse.n_t, coarse.n_sheet_x());
    for (std::size_t i = 0; i < coarse.n_t; ++i) {
        for (std::size_t m = 0; m < coarse.n_sheet_x(); ++m) {
            cells(i, m) = values(i + 1, m + 1) - values(i, m + 1) - values(i + 1, m) + values(i, m);
        }
    }
    return SheetSample(coarse, std::move(values), std::move(cells), fine.seed());
}

/// Grid-aligned closed rectangle [t_lo, t_hi] x [x_lo, x_hi].
struct RectRegion {
    double t_lo = 0.0;
    double t_hi = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;

    [[nodiscard]] double area() const noexcept { return (t_hi - t_lo) * (x_hi - x_lo); }

    friend bool operator==(const RectRegion&, const RectRegion&) = default;
};

/// Intersection area of two rectangles (0 when they only touch).
[[nodiscard]] inline double overlap_area(const RectRegion& a, const RectRegion& b) noexcept {
    const double dt = std::min(a.t_hi, b.t_hi) - std::max(a.t_lo, b.t_lo);
    const double dx = std::min(a.x_hi, b.x_hi) - std::max(a.x_lo, b.x_lo);
    return (dt > 0.0 && dx > 0.0) ? dt * dx : 0.0;
}

/// Lattice indices of a rectangle's corners on the sheet lattice.
struct RectIndices {
    std::size_t i_lo, i_hi, m_lo, m_hi;
};

[[nodiscard]] inline RectIndices rect_indices(const GridSpec& grid, const RectRegion& r) {
    if (r.t_lo > r.t_hi || r.x_lo > r.x_hi) {
        throw Error(ErrorKind::invalid_argument, "rectangle bounds are reversed");
    }
    return {lattice_index(r.t_lo, grid.h, grid.n_t, "t_lo"),
            lattice_index(r.t_hi, grid.h, grid.n_t, "t_hi"),
            lattice_index(r.x_lo, grid.h, grid.n_sheet_x(), "x_lo"),
            lattice_index(r.x_hi, grid.h, grid.n_sheet_x(), "x_hi")};
}

/// Measure of a grid-aligned rectangle by inclusion-exclusion on the sheet.
[[nodiscard]] inline double rect_measure(const SheetSample& sheet, const RectIndices& r) noexcept {
    return sheet(r.i_hi, r.m_hi) - sheet(r.i_lo, r.m_hi) - sheet(r.i_hi, r.m_lo) +
           sheet(r.i_lo, r.m_lo);
}

[[nodiscard]] inline double rect_measure(const SheetSample& sheet, const RectRegion& r) {
    return rect_measure(sheet, rect_indices(sheet.grid(), r));
}

/// Noise W(t, x) on the lattice, stored on the whole triangle t_i + x_j <= t_max + x_max
/// so that values along the characteristics x + t = const are available.
///
/// For noise extracted from a sheet, W(t, x) = B(t, t + x), and the entry at
/// (k, m - k) is B(t_k, x_m): fixing m follows the sheet at a fixed second
/// coordinate.
class DiagonalPath {
public:
    DiagonalPath(const GridSpec& grid, Matrix extended, std::optional<std::uint64_t> seed)
        : grid_(grid), extended_(std::move(extended)), seed_(seed) {
        if (extended_.rows() != grid_.n_t + 1 || extended_.cols() != grid_.n_sheet_x() + 1) {
            throw Error(ErrorKind::grid_mismatch, "diagonal path dimensions do not match the grid");
        }
    }

    [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
    [[nodiscard]] std::optional<std::uint64_t> seed() const noexcept { return seed_; }

    /// W(t_i, x_j) for j up to n_sheet_x - i.
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const noexcept {
        return extended_(i, j);
    }

    /// W(t_k, x_m - t_k): the noise along the characteristic through x_m at t = 0.
    [[nodiscard]] double along_characteristic(std::size_t k, std::size_t m) const noexcept {
        return extended_(k, m - k);
    }

    /// W restricted to the main grid [0, t_max] x [0, x_max].
    [[nodiscard]] ScalarField field() const {
        ScalarField out(grid_);
        for (std::size_t i = 0; i <= grid_.n_t; ++i) {
            for (std::size_t j = 0; j <= grid_.n_x; ++j) out(i, j) = extended_(i, j);
        }
        return out;
    }

    [[nodiscard]] const Matrix& extended() const noexcept { return extended_; }

    void write_csv(std::ostream& os) const {
        const ScalarField f = field();
        csv::write_lattice(os, f.values(), grid_.h);
    }

private:
    GridSpec grid_;
    Matrix extended_;
    std::optional<std::uint64_t> seed_;
};

/// W(t_i, x_j) = B(t_i, t_i + x_j), an exact lattice lookup.
[[nodiscard]] inline DiagonalPath diagonal_noise(const SheetSample& sheet) {
    const GridSpec& g = sheet.grid();
    const std::size_t top = g.n_sheet_x();
    Matrix ext(g.n_t + 1, top + 1, 0.0);
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; i + j <= top; ++j) ext(i, j) = sheet(i, i + j);
    }
    return DiagonalPath(g, std::move(ext), sheet.seed());
}

/// Deterministic noise field, evaluated on the same triangle as diagonal_noise.
[[nodiscard]] inline DiagonalPath diagonal_path_from_function(const GridSpec& g, const PlaneFunction& w) {
    const std::size_t top = g.n_sheet_x();
    Matrix ext(g.n_t + 1, top + 1, 0.0);
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; i + j <= top; ++j) ext(i, j) = w(g.t(i), g.x(j));
    }
    return DiagonalPath(g, std::move(ext), std::nullopt);
}

/// Lattice node (t_i, x_j).
struct GridPoint {
    std::size_t i = 0;
    std::size_t j = 0;
};

/// Unbiased sample covariance of paired observations.
[[nodiscard]] inline double sample_covariance(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw Error(ErrorKind::invalid_argument, "sample size mismatch");
    if (xs.size() < 2) throw Error(ErrorKind::invalid_argument, "covariance needs at least 2 samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(ys.size());
    double s = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) s += (xs[k] - mx) * (ys[k] - my);
    return s / static_cast<double>(xs.size() - 1);
}

/// Monte Carlo standard error of sample_covariance: the standard deviation of
/// the centred products divided by sqrt(N).
[[nodiscard]] inline double covariance_standard_error(std::span<const double> xs,
                                                      std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) throw Error(ErrorKind::invalid_argument, "covariance needs at least 2 samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    std::vector<double> prod(n);
    for (std::size_t k = 0; k < n; ++k) prod[k] = (xs[k] - mx) * (ys[k] - my);
    double mp = 0.0;
    for (double p : prod) mp += p;
    mp /= static_cast<double>(n);
    double var = 0.0;
    for (double p : prod) var += (p - mp) * (p - mp);
    var /= static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
}

/// Sample covariance across realisations of the field values at two nodes.
[[nodiscard]] inline double empirical_covariance(std::span<const ScalarField> samples, GridPoint p1,
                                                 GridPoint p2) {
    if (samples.size() < 2) throw Error(ErrorKind::invalid_argument, "covariance needs at least 2 samples");
    std::vector<double> xs, ys;
    xs.reserve(samples.size());
    ys.reserve(samples.size());
    for (const auto& s : samples) {
        require_same_grid(s.grid(), samples.front().grid(), "empirical_covariance samples");
        xs.push_back(s(p1.i, p1.j));
        ys.push_back(s(p2.i, p2.j));
    }
    return sample_covariance(xs, ys);
}

}  // namespace spde
