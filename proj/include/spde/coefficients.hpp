// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spde/error.hpp"
#include "spde/finite_difference.hpp"
#include "spde/grid.hpp"

namespace spde {

/// Where a coefficient partial came from.
enum class PartialsSource { analytic, finite_difference };

[[nodiscard]] inline const char* to_string(PartialsSource s) noexcept {
    return s == PartialsSource::analytic ? "analytic" : "finite_difference";
}

/// Coefficients of the first-order operator D = a d/dt + b d/dx + c.
///
/// a and b must be C^1; their partials may be supplied analytically, otherwise
/// they are taken by central differences. c only needs to be evaluable.
struct CoefficientSet {
    PlaneFunction a;
    PlaneFunction b;
    PlaneFunction c;
    std::optional<PlaneFunction> da_dt;
    std::optional<PlaneFunction> da_dx;
    std::optional<PlaneFunction> db_dt;
    std::optional<PlaneFunction> db_dx;

    /// Step used when a partial has to be differenced.
    double fd_step = 1e-5;

    [[nodiscard]] bool has_analytic_partials() const noexcept {
        return da_dt && da_dx && db_dt && db_dx;
    }

    [[nodiscard]] PartialsSource partials_source() const noexcept {
        return has_analytic_partials() ? PartialsSource::analytic : PartialsSource::finite_difference;
    }

    [[nodiscard]] double a_t(double t, double x) const {
        return da_dt ? (*da_dt)(t, x) : central_diff(a, t, x, Axis::t, fd_step);
    }
    [[nodiscard]] double a_x(double t, double x) const {
        return da_dx ? (*da_dx)(t, x) : central_diff(a, t, x, Axis::x, fd_step);
    }
    [[nodiscard]] double b_t(double t, double x) const {
        return db_dt ? (*db_dt)(t, x) : central_diff(b, t, x, Axis::t, fd_step);
    }
    [[nodiscard]] double b_x(double t, double x) const {
        return db_dx ? (*db_dx)(t, x) : central_diff(b, t, x, Axis::x, fd_step);
    }
};

/// Polynomial sum_k coef_k t^pt_k x^px_k. Backs every built-in coefficient of
/// the configuration language (constants, t, x, t+x, general polynomials).
struct Polynomial {
    struct Term {
        double coef = 0.0;
        int pt = 0;
        int px = 0;
        friend bool operator==(const Term&, const Term&) = default;
    };
    std::vector<Term> terms;

    [[nodiscard]] static Polynomial constant(double k) { return Polynomial{{{k, 0, 0}}}; }

    [[nodiscard]] double operator()(double t, double x) const noexcept {
        double sum = 0.0;
        for (const auto& term : terms) {
            sum += term.coef * std::pow(t, term.pt) * std::pow(x, term.px);
        }
        return sum;
    }

    [[nodiscard]] Polynomial derivative(Axis axis) const {
        Polynomial out;
        for (const auto& term : terms) {
            const int p = axis == Axis::t ? term.pt : term.px;
            if (p == 0 || term.coef == 0.0) continue;
            Term d = term;
            d.coef *= p;
            (axis == Axis::t ? d.pt : d.px) -= 1;
            out.terms.push_back(d);
        }
        return out;
    }

    [[nodiscard]] Polynomial negated() const {
        Polynomial out = *this;
        for (auto& term : out.terms) term.coef = -term.coef;
        return out;
    }

    [[nodiscard]] bool is_zero() const noexcept {
        for (const auto& term : terms) {
            if (term.coef != 0.0) return false;
        }
        return true;
    }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;
};

/// CoefficientSet with analytic partials from polynomial a, b, c.
[[nodiscard]] inline CoefficientSet make_coefficients(const Polynomial& a, const Polynomial& b,
                                                      const Polynomial& c) {
    CoefficientSet out;
    out.a = a;
    out.b = b;
    out.c = c;
    out.da_dt = a.derivative(Axis::t);
    out.da_dx = a.derivative(Axis::x);
    out.db_dt = b.derivative(Axis::t);
    out.db_dx = b.derivative(Axis::x);
    return out;
}

/// Coefficients with b = -a, the only case admitting function-valued solutions
/// of the transport-type equation.
[[nodiscard]] inline CoefficientSet make_antisymmetric(const Polynomial& a, const Polynomial& c) {
    return make_coefficients(a, a.negated(), c);
}

/// Checks evaluability on the lattice and, when analytic partials are supplied,
/// their agreement with central differences at every node.
inline void validate_coefficients(const CoefficientSet& cs, const GridSpec& grid,
                                  double tol = 1e-5) {
    if (!cs.a || !cs.b || !cs.c) {
        throw Error(ErrorKind::invalid_argument, "coefficient set is missing a, b or c");
    }
    const double h_fd = default_fd_step(grid.h);
    const Domain dom{0.0, grid.t_max, 0.0, grid.sheet_x_max};
    auto check = [&](const char* name, const PlaneFunction& f, const std::optional<PlaneFunction>& df,
                     Axis axis, double t, double x) {
        if (!df) return;
        const double fd = central_diff(f, t, x, axis, h_fd, dom);
        const double an = (*df)(t, x);
        if (std::abs(fd - an) > tol * std::max(1.0, std::abs(an))) {
            std::ostringstream msg;
            msg << "analytic partial " << name << " disagrees with central differences at (" << t
                << ", " << x << "): " << an << " vs " << fd;
            throw Error(ErrorKind::invalid_argument, msg.str());
        }
    };
    for (std::size_t i = 0; i <= grid.n_t; ++i) {
        for (std::size_t j = 0; j <= grid.n_sheet_x(); ++j) {
            const double t = grid.t(i);
            const double x = grid.x(j);
            if (!std::isfinite(cs.a(t, x)) || !std::isfinite(cs.b(t, x)) || !std::isfinite(cs.c(t, x))) {
                throw Error(ErrorKind::invalid_argument, "coefficient is not finite on the lattice");
            }
            check("da/dt", cs.a, cs.da_dt, Axis::t, t, x);
            check("da/dx", cs.a, cs.da_dx, Axis::x, t, x);
            check("db/dt", cs.b, cs.db_dt, Axis::t, t, x);
            check("db/dx", cs.b, cs.db_dx, Axis::x, t, x);
        }
    }
}

}  // namespace spde
