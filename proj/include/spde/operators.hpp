// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "spde/coefficients.hpp"
#include "spde/error.hpp"
#include "spde/gaussian_field.hpp"
#include "spde/grid.hpp"
#include "spde/quadrature.hpp"
#include "spde/test_function.hpp"

namespace spde {

/// First-order operator D f = a df/dt + b df/dx + c f.
struct OperatorD {
    CoefficientSet coeffs;
};

/// A smooth function together with its first partials.
struct SmoothFunction {
    PlaneFunction value;
    PlaneFunction dt;
    PlaneFunction dx;
};

[[nodiscard]] inline double apply_D(const OperatorD& op, const SmoothFunction& f, double t, double x) {
    const auto& cs = op.coeffs;
    return cs.a(t, x) * f.dt(t, x) + cs.b(t, x) * f.dx(t, x) + cs.c(t, x) * f.value(t, x);
}

/// D* phi = -d(a phi)/dt - d(b phi)/dx + c phi, expanded with analytic bump
/// derivatives.
[[nodiscard]] inline double apply_adjoint(const OperatorD& op, const TestFunction& tf, double t, double x) {
    const double phi = bump_eval(tf, t, x, Derivative::value);
    const double phi_t = bump_eval(tf, t, x, Derivative::dt);
    const double phi_x = bump_eval(tf, t, x, Derivative::dx);
    if (phi == 0.0 && phi_t == 0.0 && phi_x == 0.0) return 0.0;
    const auto& cs = op.coeffs;
    return -cs.a_t(t, x) * phi - cs.a(t, x) * phi_t - cs.b_x(t, x) * phi - cs.b(t, x) * phi_x +
           cs.c(t, x) * phi;
}

/// |<Df, phi> - <f, D* phi>| with both pairings by trapezoid on the grid.
[[nodiscard]] inline double adjoint_identity_residual(const OperatorD& op, const SmoothFunction& f,
                                                      const TestFunction& tf, const GridSpec& grid) {
    validate_test_function(tf, grid);
    const ScalarField lhs = sample_field(grid, [&](double t, double x) {
        const double phi = bump_eval(tf, t, x);
        return phi == 0.0 ? 0.0 : apply_D(op, f, t, x) * phi;
    });
    const ScalarField rhs = sample_field(grid, [&](double t, double x) {
        const double dstar = apply_adjoint(op, tf, t, x);
        return dstar == 0.0 ? 0.0 : f.value(t, x) * dstar;
    });
    return std::abs(integrate_2d(lhs) - integrate_2d(rhs));
}

/// Lattice weights of one weak-form check, so that the residual for any pair
/// of fields is a pair of weighted sums. Reused across Monte Carlo seeds.
struct WeakFormKernel {
    ScalarField solution_weight;  ///< multiplies the candidate solution
    ScalarField noise_weight;     ///< multiplies the noise
};

/// Kernel of the transport-type weak form
///   int int r (phi_t - phi_x) = int int W (d(a phi)/dt + d(b phi)/dx - c phi).
[[nodiscard]] inline WeakFormKernel transport_kernel(const OperatorD& op, const TestFunction& tf,
                                                     const GridSpec& grid) {
    validate_test_function(tf, grid);
    return {sample_field(grid,
                         [&](double t, double x) {
                             return bump_eval(tf, t, x, Derivative::dt) -
                                    bump_eval(tf, t, x, Derivative::dx);
                         }),
            sample_field(grid, [&](double t, double x) { return -apply_adjoint(op, tf, t, x); })};
}

/// Kernel of the weak form -<U, phi_t> = <W, D* phi>.
[[nodiscard]] inline WeakFormKernel b_zero_kernel(const OperatorD& op, const TestFunction& tf,
                                                    const GridSpec& grid) {
    validate_test_function(tf, grid);
    return {sample_field(grid, [&](double t, double x) { return -bump_eval(tf, t, x, Derivative::dt); }),
            sample_field(grid, [&](double t, double x) { return apply_adjoint(op, tf, t, x); })};
}

namespace detail {

inline double weighted_integral(const ScalarField& f, const ScalarField& w) {
    require_same_grid(f.grid(), w.grid(), "weak-form pairing");
    const auto& g = f.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        const double wt = (i == 0 || i == g.n_t) ? 0.5 : 1.0;
        double row = 0.0;
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            const double wx = (j == 0 || j == g.n_x) ? 0.5 : 1.0;
            row += wx * f(i, j) * w(i, j);
        }
        sum += wt * row;
    }
    return sum * g.h * g.h;
}

}  // namespace detail

/// |<solution, solution_weight> - <noise, noise_weight>| by trapezoid.
[[nodiscard]] inline double weak_residual(const WeakFormKernel& kernel, const ScalarField& solution,
                                          const ScalarField& noise) {
    require_same_grid(solution.grid(), noise.grid(), "solution and noise");
    return std::abs(detail::weighted_integral(solution, kernel.solution_weight) -
                    detail::weighted_integral(noise, kernel.noise_weight));
}

[[nodiscard]] inline double weak_residual_transport(const ScalarField& r, const ScalarField& w,
                                                    const OperatorD& op, const TestFunction& tf) {
    require_same_grid(r.grid(), w.grid(), "weak_residual_transport");
    return weak_residual(transport_kernel(op, tf, r.grid()), r, w);
}

[[nodiscard]] inline double weak_residual_transport(const ScalarField& r, const DiagonalPath& w,
                                                    const OperatorD& op, const TestFunction& tf) {
    return weak_residual_transport(r, w.field(), op, tf);
}

[[nodiscard]] inline double weak_residual_b_zero(const ScalarField& u, const ScalarField& w,
                                                   const OperatorD& op, const TestFunction& tf) {
    require_same_grid(u.grid(), w.grid(), "weak_residual_b_zero");
    return weak_residual(b_zero_kernel(op, tf, u.grid()), u, w);
}

/// One residual evaluation, serialised as {h, seed, test_function_id, residual}.
struct ResidualRecord {
    double h = 0.0;
    std::optional<std::uint64_t> seed;
    std::string test_function_id;
    double residual = 0.0;

    friend bool operator==(const ResidualRecord&, const ResidualRecord&) = default;
};

inline void to_json(nlohmann::json& j, const ResidualRecord& r) {
    j = nlohmann::json{{"h", r.h},
                       {"seed", r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr)},
                       {"test_function_id", r.test_function_id},
                       {"residual", r.residual}};
}

inline void from_json(const nlohmann::json& j, ResidualRecord& r) {
    r.h = j.at("h").get<double>();
    r.seed = j.at("seed").is_null() ? std::nullopt
                                    : std::optional<std::uint64_t>(j.at("seed").get<std::uint64_t>());
    r.test_function_id = j.at("test_function_id").get<std::string>();
    r.residual = j.at("residual").get<double>();
}

}  // namespace spde
