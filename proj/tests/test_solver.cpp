// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "spde/gaussian_field.hpp"
#include "spde/operators.hpp"
#include "spde/solver.hpp"
#include "spde/studies.hpp"

using namespace spde;

namespace {

const Polynomial kT{{{1.0, 1, 0}}};
const Polynomial kX{{{1.0, 0, 1}}};

}  // namespace

TEST(Curves, NelsonSiegelSlopeMatchesDifferences) {
    const InitialCurve c = nelson_siegel_curve(0.04, -0.02, 0.01, 1.5, 3.0);
    for (double x : {0.0, 1e-7, 0.3, 1.0, 2.9}) {
        const double e = 1e-6;
        const double lo = std::max(0.0, x - e);
        const double fd = (c.r0(x + e) - c.r0(lo)) / (x + e - lo);
        EXPECT_NEAR(c.derivative(x), fd, 1e-6) << x;
    }
    EXPECT_NEAR(c.r0(0.0), 0.04 - 0.02, 1e-12);
}

TEST(Transport, ShiftsTheInitialCurve) {
    const GridSpec g = make_grid(1, 1, 0.1);
    const InitialCurve c{[](double x) { return x * x; }, std::nullopt, 2.0};
    const SolutionField r = transport_solution(g, c);
    EXPECT_DOUBLE_EQ(r(3, 4), std::pow(0.3 + 0.4, 2));
    EXPECT_EQ(r.provenance.formula, Formula::transport);
}

TEST(ClosedForm, ZeroVolIsTransportBitForBit) {
    const GridSpec g = make_grid(1, 1, 0.05);
    const InitialCurve c = nelson_siegel_curve(0.04, -0.02, 0.01, 1.5, 2.0);
    const DiagonalPath w = diagonal_noise(sample_sheet(g, 17));
    const auto cs = make_antisymmetric(Polynomial::constant(0), Polynomial::constant(0));
    EXPECT_EQ(solve_closed_form(cs, c, w).field.values(), transport_solution(g, c).field.values());
    EXPECT_EQ(solve_ito_form(cs, c, w).field.values(), transport_solution(g, c).field.values());
}

TEST(ClosedForm, ConstantVolIsSigmaTimesNoise) {
    const GridSpec g = make_grid(1, 1, 0.05);
    const InitialCurve c = flat_curve(0.03, 2.0);
    const DiagonalPath w = diagonal_noise(sample_sheet(g, 4));
    const auto cs = make_antisymmetric(Polynomial::constant(0.2), Polynomial::constant(0));
    const SolutionField r = solve_closed_form(cs, c, w);
    const SolutionField ito = solve_ito_form(cs, c, w);
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            EXPECT_NEAR(r(i, j), 0.03 + 0.2 * w(i, j), 1e-15);
            EXPECT_NEAR(ito(i, j), r(i, j), 1e-14);
        }
    }
    EXPECT_EQ(*r.provenance.seed, 4u);
    EXPECT_EQ(*r.provenance.path, IntegralPath::characteristic);
}

TEST(ClosedForm, DeterministicNoiseOracle) {
    // a = 1, c = 0, W = t x: the characteristic integral vanishes and r = t x + r0(t + x)
    const GridSpec g = make_grid(1, 1, 0.1);
    const auto cs = make_antisymmetric(Polynomial::constant(1), Polynomial::constant(0));
    const DiagonalPath w = diagonal_path_from_function(g, [](double t, double x) { return t * x; });
    const SolutionField r = solve_closed_form(cs, flat_curve(0, 2), w);
    EXPECT_NEAR(r(5, 7), 0.5 * 0.7, 1e-14);
}

TEST(ClosedForm, CharacteristicIntegralOracle) {
    // a = t, c = 0: bracket a_x - a_t + c = -1 and W = 1 for t > 0
    const GridSpec g = make_grid(1, 1, 0.1);
    const auto cs = make_antisymmetric(kT, Polynomial::constant(0));
    const DiagonalPath w = diagonal_path_from_function(g, [](double t, double) { return t > 0 ? 1.0 : 0.0; });
    const SolutionField r = solve_closed_form(cs, flat_curve(0, 2), w);
    // int_0^t W ds by trapezoid: (t - h/2) for t > 0
    EXPECT_NEAR(r(10, 3), 1.0 - (1.0 - 0.05), 1e-12);
}

TEST(ClosedForm, ExactSolutionSatisfiesWeakFormDeterministically) {
    // a = x, c = t, smooth noise: the characteristic form solves the equation up to quadrature error
    const auto cs = make_antisymmetric(kX, kT);
    const PlaneFunction wf = [](double t, double x) { return std::sin(2 * t) * std::cos(x); };
    auto residual = [&](double h) {
        const GridSpec g = make_grid(1, 1, h);
        const DiagonalPath w = diagonal_path_from_function(g, wf);
        const SolutionField r = solve_closed_form(cs, flat_curve(0.01, 2), w);
        return weak_residual_transport(r.field, w, OperatorD{cs}, TestFunction{0.5, 0.5, 0.3, 0.3});
    };
    const double e1 = residual(0.02), e2 = residual(0.01);
    EXPECT_LT(e2, 1e-5);
    EXPECT_LT(e2, e1);
}

TEST(ClosedForm, FixedMaturityFormFailsWeakFormWhenBracketIsNonzero) {
    const auto cs = make_antisymmetric(kT, Polynomial::constant(0));
    const PlaneFunction wf = [](double t, double x) { return t * (1 + x); };
    const GridSpec g = make_grid(1, 1, 0.01);
    const DiagonalPath w = diagonal_path_from_function(g, wf);
    const TestFunction tf{0.5, 0.5, 0.3, 0.3};
    const double good = weak_residual_transport(solve_closed_form(cs, flat_curve(0, 2), w).field, w, {cs}, tf);
    const double bad = weak_residual_transport(
        solve_closed_form(cs, flat_curve(0, 2), w, IntegralPath::fixed_maturity).field, w, {cs}, tf);
    EXPECT_LT(good, 1e-6);
    EXPECT_GT(bad, 1e-3);
}

TEST(ClosedForm, Preconditions) {
    const GridSpec g = make_grid(1, 1, 0.1);
    const DiagonalPath w = diagonal_noise(sample_sheet(g, 1));
    const auto bad = make_coefficients(Polynomial::constant(1), Polynomial::constant(1), Polynomial::constant(0));
    try {
        (void)solve_closed_form(bad, flat_curve(0, 2), w);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::existence);
    }
    const auto ok = make_antisymmetric(Polynomial::constant(1), Polynomial::constant(0));
    try {
        (void)solve_closed_form(ok, flat_curve(0, 1.5), w);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::domain);
    }
    const DiagonalPath shifted = diagonal_path_from_function(g, [](double, double) { return 1.0; });
    EXPECT_THROW((void)solve_closed_form(ok, flat_curve(0, 2), shifted), Error);
}

TEST(ItoForm, GapShrinksUnderRefinementForTimeDependentVol) {
    const auto cs = make_antisymmetric(kT, Polynomial::constant(0));
    const GridSpec fine = make_grid(1, 1, 0.01);
    int decreasing = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const SheetSample sheet = sample_sheet(fine, derive_seed(77, s));
        std::vector<double> gaps;
        for (std::size_t f : {4u, 2u, 1u}) {
            gaps.push_back(representation_gap(cs, flat_curve(0, 2), diagonal_noise(restrict_sheet(sheet, f))));
        }
        decreasing += gaps[0] > gaps[1] && gaps[1] > gaps[2];
    }
    EXPECT_GE(decreasing, 4);
}

TEST(BZero, OracleAndPreconditions) {
    const GridSpec g = make_grid(1, 1, 0.1);
    const ScalarField w = sample_field(g, [](double t, double x) { return t * x; });
    const auto cs = make_coefficients(Polynomial::constant(1), Polynomial::constant(0), Polynomial::constant(0));
    const SolutionField u = solve_b_zero(cs, [](double) { return 0.0; }, w);
    EXPECT_NEAR(u(10, 10), 1.0, 1e-14);
    const auto [lhs, rhs] = b_zero_identity_sides(cs, u.field, w, 10, 10);
    EXPECT_NEAR(lhs, 0.5, 1e-14);  // t x^2 / 2
    EXPECT_NEAR(rhs, 0.5, 1e-14);
    const auto with_b = make_coefficients(Polynomial::constant(1), Polynomial::constant(0.5), Polynomial::constant(0));
    EXPECT_THROW((void)solve_b_zero(with_b, [](double) { return 0.0; }, w), Error);
}

TEST(BZero, IdentityHoldsExactlyOnTheSameLattice) {
    const GridSpec g = make_grid(1, 1, 0.05);
    const ScalarField w = diagonal_noise(sample_sheet(g, 8)).field();
    const auto cs = make_coefficients(Polynomial{{{1, 0, 0}, {1, 1, 1}}}, Polynomial::constant(0),
                                      Polynomial::constant(0.5));
    const SolutionField u = solve_b_zero(cs, [](double x) { return std::sin(x); }, w);
    for (std::size_t i : {5u, 20u}) {
        for (std::size_t j : {3u, 20u}) {
            const auto [lhs, rhs] = b_zero_identity_sides(cs, u.field, w, i, j);
            EXPECT_NEAR(lhs, rhs, 1e-13);
        }
    }
}

TEST(BZero, BracketFieldIsSeparableForSolutions) {
    const GridSpec g = make_grid(1, 1, 0.05);
    const ScalarField w = diagonal_noise(sample_sheet(g, 9)).field();
    const auto cs = make_coefficients(Polynomial{{{1, 1, 0}}}, Polynomial::constant(0), Polynomial::constant(1));
    const SolutionField u = solve_b_zero(cs, [](double x) { return x; }, w);
    const ScalarField br = b_zero_bracket_field(cs, u.field, w);
    double sup = 0.0;
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            sup = std::max(sup, std::abs(br(i, j) - br(i, 0) - br(0, j) + br(0, 0)));
        }
    }
    EXPECT_LT(sup, 1e-13);
    // a perturbed U is not a solution
    ScalarField bad = u.field;
    bad(10, 10) += 1.0;
    const ScalarField br2 = b_zero_bracket_field(cs, bad, w);
    EXPECT_GT(std::abs(br2(10, 20) - br2(10, 0) - br2(0, 20) + br2(0, 0)), 1e-3);
}

TEST(Provenance, JsonFields) {
    const nlohmann::json j = Provenance{Formula::closed_form, IntegralPath::fixed_maturity, 5, PartialsSource::analytic};
    EXPECT_EQ(j["formula"], "closed_form");
    EXPECT_EQ(j["integral_path"], "fixed_maturity");
    EXPECT_EQ(j["seed"], 5);
    EXPECT_EQ(j["partials"], "analytic");
}

TEST(SolutionCsv, HeaderAndShape) {
    const GridSpec g = make_grid(1, 1, 0.5);
    std::ostringstream os;
    transport_solution(g, flat_curve(1, 2)).write_csv(os);
    EXPECT_EQ(os.str(), "t,0,0.5,1\n0,1,1,1\n0.5,1,1,1\n1,1,1,1\n");
}

