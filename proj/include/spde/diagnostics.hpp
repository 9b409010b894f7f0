// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "json.hpp"
#include "spde/coefficients.hpp"
#include "spde/error.hpp"
#include "spde/gaussian_field.hpp"
#include "spde/grid.hpp"
#include "spde/parallel.hpp"
#include "spde/quadrature.hpp"

namespace spde {

// ---------------------------------------------------------------------------
// Existence criterion

struct ExistenceReport {
    bool exists = false;
    double max_deviation = 0.0;  ///< sup of |a + b| over the sheet lattice
    double t_at = 0.0;
    double x_at = 0.0;
};

/// A function-valued solution with diagonal sheet noise exists iff a = -b.
/// Checked on every node of the sheet lattice, where the solvers evaluate
/// the coefficients.
[[nodiscard]] inline ExistenceReport existence_check(const CoefficientSet& cs, const GridSpec& grid,
                                                     double tol = 1e-9) {
    ExistenceReport rep;
    for (std::size_t i = 0; i <= grid.n_t; ++i) {
        for (std::size_t m = 0; m <= grid.n_sheet_x(); ++m) {
            const double t = grid.t(i), x = grid.x(m);
            const double dev = std::abs(cs.a(t, x) + cs.b(t, x));
            if (dev > rep.max_deviation) {
                rep.max_deviation = dev;
                rep.t_at = t;
                rep.x_at = x;
            }
        }
    }
    rep.exists = rep.max_deviation <= tol;
    return rep;
}

inline void to_json(nlohmann::json& j, const ExistenceReport& r) {
    j = nlohmann::json{{"exists", r.exists},
                       {"max_deviation", r.max_deviation},
                       {"at", {{"t", r.t_at}, {"x", r.x_at}}}};
}

// ---------------------------------------------------------------------------
// Z(t, .) and its quadratic variation

/// Values of a function of x on the lattice x_j = j * step, j = 0..n.
struct LineProfile {
    double t = 0.0;
    double step = 0.0;
    std::vector<double> values;

    [[nodiscard]] std::size_t index_of(double x, const char* what) const {
        return lattice_index(x, step, values.size() - 1, what);
    }
};

/// Z(t, x_j) = int_0^t A(s, x_j) B(s, s + x_j) ds with A = a + b, trapezoid
/// in s. The integrand is evaluated at fixed x.
[[nodiscard]] inline LineProfile build_z(const CoefficientSet& cs, const SheetSample& sheet, std::size_t i) {
    const GridSpec& g = sheet.grid();
    if (i > g.n_t) throw Error(ErrorKind::misaligned, "build_z time index outside the grid");
    LineProfile z{g.t(i), g.h, std::vector<double>(g.n_x + 1, 0.0)};
    std::vector<double> integrand(i + 1);
    for (std::size_t j = 0; j <= g.n_x; ++j) {
        for (std::size_t k = 0; k <= i; ++k) {
            const double s = g.t(k), x = g.x(j);
            integrand[k] = (cs.a(s, x) + cs.b(s, x)) * sheet(k, k + j);
        }
        z.values[j] = trapezoid(integrand, g.h);
    }
    return z;
}

/// The same integral taken along the characteristic through (t, x):
///   Zc(t, x_j) = int_0^t A(s, t + x_j - s) B(s, t + x_j) ds.
/// This is the quantity whose differentiability in x decides existence once
/// the equation is written in the coordinates (t, t + x).
[[nodiscard]] inline LineProfile build_z_characteristic(const CoefficientSet& cs, const SheetSample& sheet,
                                                        std::size_t i) {
    const GridSpec& g = sheet.grid();
    if (i > g.n_t) throw Error(ErrorKind::misaligned, "build_z time index outside the grid");
    LineProfile z{g.t(i), g.h, std::vector<double>(g.n_x + 1, 0.0)};
    std::vector<double> integrand(i + 1);
    for (std::size_t j = 0; j <= g.n_x; ++j) {
        const std::size_t m = i + j;
        for (std::size_t k = 0; k <= i; ++k) {
            const double s = g.t(k), x = g.x(m - k);
            integrand[k] = (cs.a(s, x) + cs.b(s, x)) * sheet(k, m);
        }
        z.values[j] = trapezoid(integrand, g.h);
    }
    return z;
}

/// sum_{k=1..n} (Z(x_lo + k delta) - Z(x_lo + (k-1) delta))^2, delta = (x_hi - x_lo)/n.
[[nodiscard]] inline double qv_estimate(const LineProfile& z, double x_lo, double x_hi, std::size_t n) {
    const std::size_t lo = z.index_of(x_lo, "x_lo");
    const std::size_t hi = z.index_of(x_hi, "x_hi");
    if (hi <= lo || n == 0 || (hi - lo) % n != 0) {
        std::ostringstream msg;
        msg << "partition count n=" << n << " does not divide the lattice span [" << x_lo << ", " << x_hi
            << "]";
        throw Error(ErrorKind::invalid_argument, msg.str());
    }
    const std::size_t stride = (hi - lo) / n;
    double sum = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double d = z.values[lo + k * stride] - z.values[lo + (k - 1) * stride];
        sum += d * d;
    }
    return sum;
}

namespace detail {

template <typename F>
double gk(F&& f, double lo, double hi) {
    if (hi <= lo) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 8, 1e-12);
}

}  // namespace detail

/// int_0^t int_{x_lo}^{x_hi} A(s, z)^2 s dz ds by adaptive Gauss-Kronrod.
[[nodiscard]] inline double qv_theoretical(const CoefficientSet& cs, double t, double x_lo, double x_hi) {
    return detail::gk(
        [&](double s) {
            return s * detail::gk(
                           [&](double z) {
                               const double a = cs.a(s, z) + cs.b(s, z);
                               return a * a;
                           },
                           x_lo, x_hi);
        },
        0.0, t);
}

/// Limit of qv_estimate on build_z_characteristic:
///   int_{x_lo}^{x_hi} int_0^t ( int_u^t A(s, t + x - s) ds )^2 du dx.
[[nodiscard]] inline double qv_theoretical_characteristic(const CoefficientSet& cs, double t, double x_lo,
                                                          double x_hi) {
    return detail::gk(
        [&](double x) {
            return detail::gk(
                [&](double u) {
                    const double inner = detail::gk(
                        [&](double s) { return cs.a(s, t + x - s) + cs.b(s, t + x - s); }, u, t);
                    return inner * inner;
                },
                0.0, t);
        },
        x_lo, x_hi);
}

struct QVReport {
    double t = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;
    std::size_t n_partitions = 0;
    double empirical_qv = 0.0;    ///< median over seeds
    double theoretical_qv = 0.0;
    double relative_error = 0.0;  ///< |empirical - theoretical| / theoretical, or |empirical| if theoretical is 0
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed;
};

inline void to_json(nlohmann::json& j, const QVReport& r) {
    j = nlohmann::json{{"t", r.t},
                       {"x_lo", r.x_lo},
                       {"x_hi", r.x_hi},
                       {"n_partitions", r.n_partitions},
                       {"empirical_qv", r.empirical_qv},
                       {"theoretical_qv", r.theoretical_qv},
                       {"relative_error", r.relative_error},
                       {"seeds", r.seeds}};
}

[[nodiscard]] inline double median(std::vector<double> v) {
    if (v.empty()) throw Error(ErrorKind::invalid_argument, "median of an empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

[[nodiscard]] inline double relative_error(double empirical, double theoretical) noexcept {
    return theoretical != 0.0 ? std::abs(empirical - theoretical) / std::abs(theoretical)
                              : std::abs(empirical);
}

// ---------------------------------------------------------------------------
// Hoelder exponent

struct HolderReport {
    double estimated_exponent = 0.0;
    bool degenerate = false;  ///< every increment vanished; exponent reported as +inf
    std::vector<std::size_t> levels;
    std::vector<double> max_increments;
    double regression_residual = 0.0;  ///< RMS residual of the log-log fit
};

inline void to_json(nlohmann::json& j, const HolderReport& r) {
    j = nlohmann::json{{"estimated_exponent",
                        r.degenerate ? nlohmann::json("inf") : nlohmann::json(r.estimated_exponent)},
                       {"degenerate", r.degenerate},
                       {"levels", r.levels},
                       {"max_increments", r.max_increments},
                       {"regression_residual", r.regression_residual}};
}

/// Slope of log max_k |Delta Z| against log delta over the given partition
/// counts.
[[nodiscard]] inline HolderReport holder_estimate(const LineProfile& z, double x_lo, double x_hi,
                                                  const std::vector<std::size_t>& levels) {
    if (levels.size() < 3) throw Error(ErrorKind::invalid_argument, "holder_estimate needs at least 3 levels");
    const std::size_t lo = z.index_of(x_lo, "x_lo");
    const std::size_t hi = z.index_of(x_hi, "x_hi");
    HolderReport rep;
    rep.levels = levels;
    std::vector<double> xs, ys;
    for (std::size_t n : levels) {
        if (hi <= lo || n == 0 || (hi - lo) % n != 0) {
            throw Error(ErrorKind::invalid_argument,
                        "level n=" + std::to_string(n) + " does not divide the lattice span");
        }
        const std::size_t stride = (hi - lo) / n;
        double max_inc = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            max_inc = std::max(max_inc, std::abs(z.values[lo + k * stride] - z.values[lo + (k - 1) * stride]));
        }
        rep.max_increments.push_back(max_inc);
        if (max_inc > 0.0) {
            xs.push_back(std::log((x_hi - x_lo) / static_cast<double>(n)));
            ys.push_back(std::log(max_inc));
        }
    }
    if (xs.size() < 2) {
        rep.degenerate = true;
        rep.estimated_exponent = std::numeric_limits<double>::infinity();
        return rep;
    }
    const double nx = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= nx;
    my /= nx;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    rep.estimated_exponent = sxy / sxx;
    const double intercept = my - rep.estimated_exponent * mx;
    double ss = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double e = ys[k] - (intercept + rep.estimated_exponent * xs[k]);
        ss += e * e;
    }
    rep.regression_residual = std::sqrt(ss / nx);
    return rep;
}

// ---------------------------------------------------------------------------
// Separability

/// sup |g(t,x) - g(t,0) - g(0,x) + g(0,0)|; zero iff g(t,x) = f(t) + k(x).
[[nodiscard]] inline double separability_residual(const ScalarField& g) {
    const auto& grid = g.grid();
    double sup = 0.0;
    for (std::size_t i = 0; i <= grid.n_t; ++i) {
        for (std::size_t j = 0; j <= grid.n_x; ++j) {
            sup = std::max(sup, std::abs(g(i, j) - g(i, 0) - g(0, j) + g(0, 0)));
        }
    }
    return sup;
}

// ---------------------------------------------------------------------------
// Partitions and the Gaussian-measure lemmas

/// Equal grid-aligned slabs of a base rectangle.
struct PartitionScheme {
    RectRegion base;
    std::size_t n = 0;
    std::vector<RectRegion> cells;

    [[nodiscard]] double sup_area() const noexcept {
        double s = 0.0;
        for (const auto& c : cells) s = std::max(s, c.area());
        return s;
    }
};

/// n slabs of equal width splitting `base` along `axis`. Every slab boundary
/// must be a lattice coordinate of `grid` (sheet lattice).
[[nodiscard]] inline PartitionScheme make_slab_partition(const RectRegion& base, std::size_t n,
                                                         const GridSpec& grid, Axis axis = Axis::x) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "partition needs n >= 1");
    const auto idx = rect_indices(grid, base);
    const std::size_t lo = axis == Axis::x ? idx.m_lo : idx.i_lo;
    const std::size_t hi = axis == Axis::x ? idx.m_hi : idx.i_hi;
    if ((hi - lo) % n != 0) {
        throw Error(ErrorKind::misaligned,
                    "slab count " + std::to_string(n) + " does not divide the lattice span of the base set");
    }
    const std::size_t stride = (hi - lo) / n;
    PartitionScheme p{base, n, {}};
    for (std::size_t k = 0; k < n; ++k) {
        RectRegion c = base;
        const double a = grid.h * static_cast<double>(lo + k * stride);
        const double b = grid.h * static_cast<double>(lo + (k + 1) * stride);
        if (axis == Axis::x) {
            c.x_lo = a;
            c.x_hi = b;
        } else {
            c.t_lo = a;
            c.t_hi = b;
        }
        p.cells.push_back(c);
    }
    return p;
}

enum class LemmaMode { diagonal, disjoint };

[[nodiscard]] inline const char* to_string(LemmaMode m) noexcept {
    return m == LemmaMode::diagonal ? "diagonal" : "disjoint";
}

/// Intersection of two rectangles, empty (zero-area) rectangles allowed.
[[nodiscard]] inline RectRegion intersect(const RectRegion& a, const RectRegion& b) noexcept {
    RectRegion r{std::max(a.t_lo, b.t_lo), std::min(a.t_hi, b.t_hi), std::max(a.x_lo, b.x_lo),
                 std::min(a.x_hi, b.x_hi)};
    if (r.t_hi < r.t_lo) r.t_hi = r.t_lo;
    if (r.x_hi < r.x_lo) r.x_hi = r.x_lo;
    return r;
}

/// Throws unless the partition pair satisfies the hypothesis of the selected
/// mode: diagonal -> (F_k n G_k)_k partitions F n G; disjoint -> for all k, l
/// one of F_k n G_l, F_l n G_k is empty.
inline void validate_lemma_geometry(const PartitionScheme& f, const PartitionScheme& g, LemmaMode mode) {
    if (f.n != g.n) throw Error(ErrorKind::invalid_argument, "partitions must have equal cell counts");
    const double scale = std::max({1.0, f.base.area(), g.base.area()});
    const double tol = 1e-12 * scale;
    if (mode == LemmaMode::diagonal) {
        double covered = 0.0;
        for (std::size_t k = 0; k < f.n; ++k) covered += overlap_area(f.cells[k], g.cells[k]);
        const double target = overlap_area(f.base, g.base);
        if (std::abs(covered - target) > tol) {
            throw Error(ErrorKind::invalid_argument,
                        "diagonal mode: (F_k n G_k) does not partition F n G");
        }
        for (std::size_t k = 0; k < f.n; ++k) {
            for (std::size_t l = 0; l < f.n; ++l) {
                if (k != l && overlap_area(f.cells[k], g.cells[l]) > tol &&
                    overlap_area(f.cells[l], g.cells[k]) > tol) {
                    throw Error(ErrorKind::invalid_argument,
                                "diagonal mode: off-diagonal cells overlap in both orders");
                }
            }
        }
    } else {
        for (std::size_t k = 0; k < f.n; ++k) {
            for (std::size_t l = 0; l < f.n; ++l) {
                if (overlap_area(f.cells[k], g.cells[l]) > tol && overlap_area(f.cells[l], g.cells[k]) > tol) {
                    throw Error(ErrorKind::invalid_argument,
                                "disjoint mode: F_k n G_l and F_l n G_k both non-empty for k=" +
                                    std::to_string(k) + ", l=" + std::to_string(l));
                }
            }
        }
    }
}

struct QuadLemLevel {
    std::size_t n = 0;
    double sup_cell_area = 0.0;
    double mean = 0.0;            ///< mean of the sum across seeds
    double standard_error = 0.0;  ///< of that mean
    double l2_distance = 0.0;     ///< sqrt(mean over seeds of (sum - limit)^2)
};

struct QuadLemReport {
    LemmaMode mode = LemmaMode::diagonal;
    double limit = 0.0;
    std::size_t n_seeds = 0;
    std::vector<QuadLemLevel> levels;
    /// per_seed[level][seed] values of the sum
    std::vector<std::vector<double>> per_seed;
};

inline void to_json(nlohmann::json& j, const QuadLemLevel& l) {
    j = nlohmann::json{{"n", l.n},
                       {"sup_cell_area", l.sup_cell_area},
                       {"mean", l.mean},
                       {"standard_error", l.standard_error},
                       {"l2_distance", l.l2_distance}};
}

inline void to_json(nlohmann::json& j, const QuadLemReport& r) {
    j = nlohmann::json{{"mode", to_string(r.mode)}, {"limit", r.limit}, {"n_seeds", r.n_seeds},
                       {"levels", r.levels}};
}

/// Description of one quadlem experiment: functions R, S and base sets F, G
/// split into n slabs along x for every n in n_values.
struct QuadLemSetup {
    PlaneFunction R;
    PlaneFunction S;
    RectRegion F;
    RectRegion G;
    std::vector<std::size_t> n_values;
    LemmaMode mode = LemmaMode::diagonal;
};

/// Monte Carlo estimate of the L^2 convergence of
///   sum_k R_k S_k B(F_k) B(G_k)
/// to int_{F n G} R S dmu (diagonal mode) or 0 (disjoint mode). R_k, S_k are
/// midpoint values: on F_k n G_k in diagonal mode, on F_k and G_k otherwise.
[[nodiscard]] inline QuadLemReport quadlem_check(const GridSpec& grid, std::uint64_t base_seed,
                                                 std::size_t n_seeds, const QuadLemSetup& setup) {
    if (n_seeds < 2) throw Error(ErrorKind::invalid_argument, "quadlem_check needs at least 2 seeds");
    struct Level {
        PartitionScheme f, g;
        std::vector<RectIndices> fi, gi;
        std::vector<double> weight;
    };
    std::vector<Level> levels;
    for (std::size_t n : setup.n_values) {
        Level lv{make_slab_partition(setup.F, n, grid), make_slab_partition(setup.G, n, grid), {}, {}, {}};
        validate_lemma_geometry(lv.f, lv.g, setup.mode);
        for (std::size_t k = 0; k < n; ++k) {
            lv.fi.push_back(rect_indices(grid, lv.f.cells[k]));
            lv.gi.push_back(rect_indices(grid, lv.g.cells[k]));
            auto mid = [](const RectRegion& r) { return std::pair{0.5 * (r.t_lo + r.t_hi), 0.5 * (r.x_lo + r.x_hi)}; };
            double w = 0.0;
            if (setup.mode == LemmaMode::diagonal) {
                const auto [t, x] = mid(intersect(lv.f.cells[k], lv.g.cells[k]));
                w = setup.R(t, x) * setup.S(t, x);
            } else {
                const auto [tf, xf] = mid(lv.f.cells[k]);
                const auto [tg, xg] = mid(lv.g.cells[k]);
                w = setup.R(tf, xf) * setup.S(tg, xg);
            }
            lv.weight.push_back(w);
        }
        levels.push_back(std::move(lv));
    }

    QuadLemReport rep;
    rep.mode = setup.mode;
    rep.n_seeds = n_seeds;
    if (setup.mode == LemmaMode::diagonal) {
        const RectRegion both = intersect(setup.F, setup.G);
        rep.limit = detail::gk(
            [&](double t) {
                return detail::gk([&](double x) { return setup.R(t, x) * setup.S(t, x); }, both.x_lo, both.x_hi);
            },
            both.t_lo, both.t_hi);
    }

    const auto sums = parallel_map<std::vector<double>>(n_seeds, [&](std::size_t s) {
        const SheetSample sheet = sample_sheet(grid, derive_seed(base_seed, s));
        std::vector<double> out;
        for (const auto& lv : levels) {
            double sum = 0.0;
            for (std::size_t k = 0; k < lv.fi.size(); ++k) {
                sum += lv.weight[k] * rect_measure(sheet, lv.fi[k]) * rect_measure(sheet, lv.gi[k]);
            }
            out.push_back(sum);
        }
        return out;
    });

    for (std::size_t l = 0; l < levels.size(); ++l) {
        std::vector<double> vals(n_seeds);
        for (std::size_t s = 0; s < n_seeds; ++s) vals[s] = sums[s][l];
        QuadLemLevel lvl;
        lvl.n = setup.n_values[l];
        lvl.sup_cell_area = std::max(levels[l].f.sup_area(), levels[l].g.sup_area());
        double mean = 0.0, sq = 0.0;
        for (double v : vals) {
            mean += v;
            sq += (v - rep.limit) * (v - rep.limit);
        }
        mean /= static_cast<double>(n_seeds);
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n_seeds - 1);
        lvl.mean = mean;
        lvl.standard_error = std::sqrt(var / static_cast<double>(n_seeds));
        lvl.l2_distance = std::sqrt(sq / static_cast<double>(n_seeds));
        rep.levels.push_back(lvl);
        rep.per_seed.push_back(std::move(vals));
    }
    return rep;
}

struct PartitionSupLevel {
    std::size_t n = 0;
    double sup_cell_area = 0.0;
    double median_sup = 0.0;
    std::vector<double> per_seed;
};

struct PartitionSupReport {
    double kappa = 0.0;
    std::vector<PartitionSupLevel> levels;
};

inline void to_json(nlohmann::json& j, const PartitionSupLevel& l) {
    j = nlohmann::json{{"n", l.n}, {"sup_cell_area", l.sup_cell_area}, {"median_sup", l.median_sup}};
}

inline void to_json(nlohmann::json& j, const PartitionSupReport& r) {
    j = nlohmann::json{{"kappa", r.kappa}, {"levels", r.levels}};
}

/// sup_k |B(F_k)| over equal slabs of F for every n, per seed, with the median
/// across seeds. Equal slabs have sup area mu(F)/n, so n^kappa sup area -> 0
/// for every kappa < 1; kappa >= 1 is rejected.
[[nodiscard]] inline PartitionSupReport partition_sup_check(const GridSpec& grid, std::uint64_t base_seed,
                                                            std::size_t n_seeds, const RectRegion& F,
                                                            const std::vector<std::size_t>& n_values,
                                                            double kappa = 0.5) {
    if (!(kappa > 0.0) || !(kappa < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "kappa must lie in (0, 1) for equal slab partitions");
    }
    if (n_seeds == 0) throw Error(ErrorKind::invalid_argument, "partition_sup_check needs seeds");
    std::vector<std::vector<RectIndices>> parts;
    std::vector<double> sup_area;
    for (std::size_t n : n_values) {
        const auto p = make_slab_partition(F, n, grid);
        sup_area.push_back(p.sup_area());
        std::vector<RectIndices> idx;
        for (const auto& c : p.cells) idx.push_back(rect_indices(grid, c));
        parts.push_back(std::move(idx));
    }
    const auto sups = parallel_map<std::vector<double>>(n_seeds, [&](std::size_t s) {
        const SheetSample sheet = sample_sheet(grid, derive_seed(base_seed, s));
        std::vector<double> out;
        for (const auto& idx : parts) {
            double m = 0.0;
            for (const auto& r : idx) m = std::max(m, std::abs(rect_measure(sheet, r)));
            out.push_back(m);
        }
        return out;
    });
    PartitionSupReport rep;
    rep.kappa = kappa;
    for (std::size_t l = 0; l < n_values.size(); ++l) {
        PartitionSupLevel lvl;
        lvl.n = n_values[l];
        lvl.sup_cell_area = sup_area[l];
        for (std::size_t s = 0; s < n_seeds; ++s) lvl.per_seed.push_back(sups[s][l]);
        lvl.median_sup = median(lvl.per_seed);
        rep.levels.push_back(std::move(lvl));
    }
    return rep;
}

}  // namespace spde
