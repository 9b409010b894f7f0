// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spde/coefficients.hpp"
#include "spde/error.hpp"
#include "spde/gaussian_field.hpp"
#include "spde/grid.hpp"
#include "spde/quadrature.hpp"

namespace spde {

using LineFunction = std::function<double(double)>;

/// Yield curve r(0, x) = r0(x), known on [0, domain_max].
struct InitialCurve {
    LineFunction r0;
    std::optional<LineFunction> dr0;
    double domain_max = 0.0;

    [[nodiscard]] double derivative(double x) const {
        if (dr0) return (*dr0)(x);
        const double h = 1e-6;
        if (x - h < 0.0) return (-3.0 * r0(x) + 4.0 * r0(x + h) - r0(x + 2.0 * h)) / (2.0 * h);
        if (x + h > domain_max) return (3.0 * r0(x) - 4.0 * r0(x - h) + r0(x - 2.0 * h)) / (2.0 * h);
        return (r0(x + h) - r0(x - h)) / (2.0 * h);
    }
};

[[nodiscard]] inline InitialCurve flat_curve(double level, double domain_max) {
    return {[level](double) { return level; }, LineFunction([](double) { return 0.0; }), domain_max};
}

/// r0(x) = beta0 + beta1 (1 - e^{-x/tau}) tau/x + beta2 ((1 - e^{-x/tau}) tau/x - e^{-x/tau}).
[[nodiscard]] inline InitialCurve nelson_siegel_curve(double beta0, double beta1, double beta2,
                                                      double tau, double domain_max) {
    auto loading = [tau](double x) {
        const double z = x / tau;
        return z < 1e-8 ? 1.0 - 0.5 * z : -std::expm1(-z) / z;
    };
    auto curve = [=](double x) {
        const double l1 = loading(x);
        return beta0 + beta1 * l1 + beta2 * (l1 - std::exp(-x / tau));
    };
    auto slope = [=](double x) {
        const double z = x / tau;
        // d/dx of (1 - e^{-z})/z is (e^{-z}(1 + z) - 1) / (z^2 tau)
        const double dl1 = z < 1e-5 ? (-0.5 + z / 3.0) / tau
                                    : (std::exp(-z) * (1.0 + z) - 1.0) / (z * z * tau);
        return beta1 * dl1 + beta2 * (dl1 + std::exp(-z) / tau);
    };
    return {curve, LineFunction(slope), domain_max};
}

/// Which closed form produced a solution field.
enum class Formula { closed_form, ito, b_zero, transport };

/// Path of the time integrals in the closed-form solutions.
///
/// characteristic: the integral runs along x + t = const, i.e. over
///   W(s, t + x - s) k(s, t + x - s). This is the form that satisfies the weak
///   formulation of dr/dt - dr/dx = D W.
/// fixed_maturity: the integral runs over W(s, x) k(s, x) at fixed x. Its time
///   differential is the fixed-maturity drift decomposition
///   dr = a dB^x + [B^x (a_x + c) + r0'(t + x)] dt, but it does not satisfy the
///   weak formulation unless a_x - a_t + c vanishes.
enum class IntegralPath { characteristic, fixed_maturity };

[[nodiscard]] inline const char* to_string(Formula f) noexcept {
    switch (f) {
        case Formula::closed_form: return "closed_form";
        case Formula::ito: return "ito";
        case Formula::b_zero: return "b_zero";
        case Formula::transport: return "transport";
    }
    return "unknown";
}

[[nodiscard]] inline const char* to_string(IntegralPath p) noexcept {
    return p == IntegralPath::characteristic ? "characteristic" : "fixed_maturity";
}

struct Provenance {
    Formula formula = Formula::transport;
    std::optional<IntegralPath> path;
    std::optional<std::uint64_t> seed;
    std::optional<PartialsSource> partials;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

inline void to_json(nlohmann::json& j, const Provenance& p) {
    j = nlohmann::json{{"formula", to_string(p.formula)}};
    j["integral_path"] = p.path ? nlohmann::json(to_string(*p.path)) : nlohmann::json(nullptr);
    j["seed"] = p.seed ? nlohmann::json(*p.seed) : nlohmann::json(nullptr);
    j["partials"] = p.partials ? nlohmann::json(to_string(*p.partials)) : nlohmann::json(nullptr);
}

/// Solution sampled on the lattice, tagged with how it was obtained.
struct SolutionField {
    ScalarField field;
    Provenance provenance;

    [[nodiscard]] const GridSpec& grid() const noexcept { return field.grid(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return field(i, j); }

    void write_csv(std::ostream& os) const { csv::write_lattice(os, field.values(), field.grid().h); }
};

namespace detail {

inline void require_curve_domain(const InitialCurve& r0, const GridSpec& g) {
    if (!r0.r0) throw Error(ErrorKind::invalid_argument, "initial curve is empty");
    if (r0.domain_max + 1e-12 * g.sheet_x_max < g.sheet_x_max) {
        std::ostringstream msg;
        msg << "initial curve is known on [0, " << r0.domain_max << "] but r0(t + x) is needed up to "
            << g.sheet_x_max;
        throw Error(ErrorKind::domain, msg.str());
    }
}

/// Sup over the sheet lattice of |a + b|.
inline void require_antisymmetric(const CoefficientSet& cs, const GridSpec& g, double tol) {
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t m = 0; m <= g.n_sheet_x(); ++m) {
            const double dev = std::abs(cs.a(g.t(i), g.x(m)) + cs.b(g.t(i), g.x(m)));
            if (dev > tol) {
                std::ostringstream msg;
                msg << "no function-valued solution: the existence criterion a(t,x) = -b(t,x) fails at ("
                    << g.t(i) << ", " << g.x(m) << ") with |a + b| = " << dev;
                throw Error(ErrorKind::existence, msg.str());
            }
        }
    }
}

inline void require_zero_initial_noise(const DiagonalPath& w) {
    for (std::size_t j = 0; j <= w.grid().n_sheet_x(); ++j) {
        if (std::abs(w(0, j)) > 1e-12) {
            throw Error(ErrorKind::invalid_argument, "noise must vanish at t = 0");
        }
    }
}

/// r0(t_i + x_j), shared by every solver so that noise-free paths match the
/// transport solution bit for bit.
inline double curve_at(const InitialCurve& r0, const GridSpec& g, std::size_t i, std::size_t j) {
    return r0.r0(g.t(i) + g.x(j));
}

}  // namespace detail

/// Noise-free transport solution r(t, x) = r0(t + x).
[[nodiscard]] inline SolutionField transport_solution(const GridSpec& grid, const InitialCurve& r0) {
    detail::require_curve_domain(r0, grid);
    ScalarField f(grid);
    for (std::size_t i = 0; i <= grid.n_t; ++i) {
        for (std::size_t j = 0; j <= grid.n_x; ++j) f(i, j) = detail::curve_at(r0, grid, i, j);
    }
    return {std::move(f), {Formula::transport, std::nullopt, std::nullopt, std::nullopt}};
}

/// Closed-form solution of dr/dt - dr/dx = a (dW/dt - dW/dx) + c W with b = -a:
///   r(t, x) = a(t, x) W(t, x) + int_0^t W [a_x - a_t + c] ds + r0(t + x),
/// the integral taken along the path selected by `path` (trapezoid rule).
[[nodiscard]] inline SolutionField solve_closed_form(const CoefficientSet& cs, const InitialCurve& r0,
                                                  const DiagonalPath& w,
                                                  IntegralPath path = IntegralPath::characteristic,
                                                  double antisymmetry_tol = 1e-12) {
    const GridSpec& g = w.grid();
    detail::require_antisymmetric(cs, g, antisymmetry_tol);
    detail::require_zero_initial_noise(w);
    detail::require_curve_domain(r0, g);

    auto bracket = [&](double t, double x) { return cs.a_x(t, x) - cs.a_t(t, x) + cs.c(t, x); };
    ScalarField f(g);
    if (path == IntegralPath::characteristic) {
        std::vector<double> integrand;
        for (std::size_t m = 0; m <= g.n_sheet_x(); ++m) {
            const std::size_t i_top = std::min(g.n_t, m);
            integrand.assign(i_top + 1, 0.0);
            for (std::size_t k = 0; k <= i_top; ++k) {
                integrand[k] = w.along_characteristic(k, m) * bracket(g.t(k), g.x(m - k));
            }
            const auto cum = integrate_time(integrand, g.h);
            for (std::size_t i = (m > g.n_x ? m - g.n_x : 0); i <= i_top; ++i) {
                const std::size_t j = m - i;
                f(i, j) = cs.a(g.t(i), g.x(j)) * w(i, j) + cum[i] + detail::curve_at(r0, g, i, j);
            }
        }
    } else {
        std::vector<double> integrand(g.n_t + 1);
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            for (std::size_t k = 0; k <= g.n_t; ++k) integrand[k] = w(k, j) * bracket(g.t(k), g.x(j));
            const auto cum = integrate_time(integrand, g.h);
            for (std::size_t i = 0; i <= g.n_t; ++i) {
                f(i, j) = cs.a(g.t(i), g.x(j)) * w(i, j) + cum[i] + detail::curve_at(r0, g, i, j);
            }
        }
    }
    return {std::move(f), {Formula::closed_form, path, w.seed(), cs.partials_source()}};
}

/// Left-point Ito sum  sum_{k < i} f(s_k, x_j) [W(s_{k+1}, x_j) - W(s_k, x_j)],
/// the stochastic integral against B^x(s) = W(s, x) at fixed x.
[[nodiscard]] inline double ito_integral(const PlaneFunction& integrand, const DiagonalPath& path,
                                         std::size_t j, std::size_t i) {
    const GridSpec& g = path.grid();
    if (i > g.n_t || j > g.n_x) throw Error(ErrorKind::misaligned, "ito_integral point outside the grid");
    double sum = 0.0;
    for (std::size_t k = 0; k < i; ++k) sum += integrand(g.t(k), g.x(j)) * (path(k + 1, j) - path(k, j));
    return sum;
}

/// Wiener-Ito representation of the same solution. Along characteristics,
///   r(t, x) = int_0^t a(s, t+x-s) d_s W(s, t+x-s) + int_0^t c(s, t+x-s) W(s, t+x-s) ds + r0(t + x),
/// where for sheet noise W(s, t+x-s) = B(s, t+x) is a Brownian motion in s.
/// At fixed maturity it is the displayed form
///   int_0^t a(s, x) dB^x(s) + int_0^t B^x(s) [a_x + c](s, x) ds + r0(t + x).
/// Stochastic sums use left endpoints, drift integrals the trapezoid rule.
[[nodiscard]] inline SolutionField solve_ito_form(const CoefficientSet& cs, const InitialCurve& r0,
                                                  const DiagonalPath& w,
                                                  IntegralPath path = IntegralPath::characteristic,
                                                  double antisymmetry_tol = 1e-12) {
    const GridSpec& g = w.grid();
    detail::require_antisymmetric(cs, g, antisymmetry_tol);
    detail::require_zero_initial_noise(w);
    detail::require_curve_domain(r0, g);

    ScalarField f(g);
    std::vector<double> drift;
    if (path == IntegralPath::characteristic) {
        for (std::size_t m = 0; m <= g.n_sheet_x(); ++m) {
            const std::size_t i_top = std::min(g.n_t, m);
            drift.assign(i_top + 1, 0.0);
            for (std::size_t k = 0; k <= i_top; ++k) {
                drift[k] = cs.c(g.t(k), g.x(m - k)) * w.along_characteristic(k, m);
            }
            const auto cum = integrate_time(drift, g.h);
            const std::size_t i_lo = m > g.n_x ? m - g.n_x : 0;
            double stochastic = 0.0;
            for (std::size_t i = 0; i <= i_top; ++i) {
                if (i >= i_lo) {
                    f(i, m - i) = stochastic + cum[i] + detail::curve_at(r0, g, i, m - i);
                }
                if (i < i_top) {
                    stochastic += cs.a(g.t(i), g.x(m - i)) *
                                  (w.along_characteristic(i + 1, m) - w.along_characteristic(i, m));
                }
            }
        }
    } else {
        drift.assign(g.n_t + 1, 0.0);
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            for (std::size_t k = 0; k <= g.n_t; ++k) {
                drift[k] = w(k, j) * (cs.a_x(g.t(k), g.x(j)) + cs.c(g.t(k), g.x(j)));
            }
            const auto cum = integrate_time(drift, g.h);
            double stochastic = 0.0;
            for (std::size_t i = 0; i <= g.n_t; ++i) {
                f(i, j) = stochastic + cum[i] + detail::curve_at(r0, g, i, j);
                if (i < g.n_t) stochastic += cs.a(g.t(i), g.x(j)) * (w(i + 1, j) - w(i, j));
            }
        }
    }
    return {std::move(f), {Formula::ito, path, w.seed(), cs.partials_source()}};
}

/// Function-valued solution of dU/dt = D W when b vanishes identically:
///   U(t, x) = U0(x) + a(t, x) W(t, x) - a(0, x) W(0, x) + int_0^t (c - a_t)(s, x) W(s, x) ds.
[[nodiscard]] inline SolutionField solve_b_zero(const CoefficientSet& cs, const LineFunction& u0,
                                                const ScalarField& w, double tol = 1e-12) {
    const GridSpec& g = w.grid();
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            if (std::abs(cs.b(g.t(i), g.x(j))) > tol) {
                throw Error(ErrorKind::existence,
                            "solve_b_zero requires b == 0; for b != 0 a function solution exists only "
                            "when int_0^t b W ds is differentiable in x (see existence_check)");
            }
        }
    }
    ScalarField f(g);
    std::vector<double> integrand(g.n_t + 1);
    for (std::size_t j = 0; j <= g.n_x; ++j) {
        const double x = g.x(j);
        for (std::size_t k = 0; k <= g.n_t; ++k) {
            integrand[k] = (cs.c(g.t(k), x) - cs.a_t(g.t(k), x)) * w(k, j);
        }
        const auto cum = integrate_time(integrand, g.h);
        const double base = u0(x) - cs.a(0.0, x) * w(0, j);
        for (std::size_t i = 0; i <= g.n_t; ++i) {
            f(i, j) = base + cs.a(g.t(i), x) * w(i, j) + cum[i];
        }
    }
    return {std::move(f), {Formula::b_zero, std::nullopt, std::nullopt, cs.partials_source()}};
}

/// Both sides of the integrated identity satisfied by any weak solution U of
/// dU/dt = D W, at lattice node (t_i, x_j):
///   LHS = int_0^x [U(t,y) - U(0,y)] dy
///   RHS = int_0^t [bW(s,x) - bW(s,0)] ds + int_0^x [aW(t,y) - aW(0,y)] dy
///         - int_0^x int_0^t (a_t + b_x - c) W ds dy
/// all by trapezoid.
[[nodiscard]] inline std::pair<double, double> b_zero_identity_sides(const CoefficientSet& cs,
                                                                       const ScalarField& u,
                                                                       const ScalarField& w,
                                                                       std::size_t i, std::size_t j) {
    require_same_grid(u.grid(), w.grid(), "b_zero_identity_sides");
    const GridSpec& g = u.grid();
    if (i > g.n_t || j > g.n_x) throw Error(ErrorKind::misaligned, "identity point outside the grid");
    std::vector<double> buf;

    buf.assign(j + 1, 0.0);
    for (std::size_t y = 0; y <= j; ++y) buf[y] = u(i, y) - u(0, y);
    const double lhs = trapezoid(buf, g.h);

    buf.assign(i + 1, 0.0);
    for (std::size_t s = 0; s <= i; ++s) {
        buf[s] = cs.b(g.t(s), g.x(j)) * w(s, j) - cs.b(g.t(s), 0.0) * w(s, 0);
    }
    const double b_term = trapezoid(buf, g.h);

    buf.assign(j + 1, 0.0);
    for (std::size_t y = 0; y <= j; ++y) {
        buf[y] = cs.a(g.t(i), g.x(y)) * w(i, y) - cs.a(0.0, g.x(y)) * w(0, y);
    }
    const double a_term = trapezoid(buf, g.h);

    std::vector<double> inner(i + 1);
    buf.assign(j + 1, 0.0);
    for (std::size_t y = 0; y <= j; ++y) {
        for (std::size_t s = 0; s <= i; ++s) {
            const double t = g.t(s), x = g.x(y);
            inner[s] = (cs.a_t(t, x) + cs.b_x(t, x) - cs.c(t, x)) * w(s, y);
        }
        buf[y] = trapezoid(inner, g.h);
    }
    const double volume_term = trapezoid(buf, g.h);

    return {lhs, b_term + a_term - volume_term};
}

/// The field whose mixed derivative vanishes for a weak solution:
///   g(t,x) = int_0^x U(t,y) dy - int_0^x aW(t,y) dy - int_0^t bW(s,x) ds
///            + int_0^x int_0^t (a_t + b_x - c) W ds dy.
/// Its separability residual equals |LHS - RHS| of b_zero_identity_sides.
[[nodiscard]] inline ScalarField b_zero_bracket_field(const CoefficientSet& cs, const ScalarField& u,
                                                        const ScalarField& w) {
    require_same_grid(u.grid(), w.grid(), "b_zero_bracket_field");
    const GridSpec& g = u.grid();
    ScalarField out(g);
    // cumulative in y for U - aW, cumulative in s for bW and the volume density
    std::vector<double> buf;
    Matrix vol_s(g.n_t + 1, g.n_x + 1);
    buf.assign(g.n_t + 1, 0.0);
    for (std::size_t y = 0; y <= g.n_x; ++y) {
        for (std::size_t s = 0; s <= g.n_t; ++s) {
            const double t = g.t(s), x = g.x(y);
            buf[s] = (cs.a_t(t, x) + cs.b_x(t, x) - cs.c(t, x)) * w(s, y);
        }
        const auto cum = integrate_time(buf, g.h);
        for (std::size_t s = 0; s <= g.n_t; ++s) vol_s(s, y) = cum[s];
    }
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        buf.assign(g.n_x + 1, 0.0);
        for (std::size_t y = 0; y <= g.n_x; ++y) {
            buf[y] = u(i, y) - cs.a(g.t(i), g.x(y)) * w(i, y) + vol_s(i, y);
        }
        const auto cum = integrate_time(buf, g.h);
        for (std::size_t j = 0; j <= g.n_x; ++j) out(i, j) = cum[j];
    }
    buf.assign(g.n_t + 1, 0.0);
    for (std::size_t j = 0; j <= g.n_x; ++j) {
        for (std::size_t s = 0; s <= g.n_t; ++s) buf[s] = cs.b(g.t(s), g.x(j)) * w(s, j);
        const auto cum = integrate_time(buf, g.h);
        for (std::size_t i = 0; i <= g.n_t; ++i) out(i, j) -= cum[i];
    }
    return out;
}

}  // namespace spde
