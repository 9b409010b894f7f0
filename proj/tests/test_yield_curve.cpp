// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "spde/yield_curve.hpp"

using namespace spde;

namespace {

const Polynomial kZero = Polynomial::constant(0);

YieldScenario scenario(const Polynomial& vol, std::size_t n_paths, double h = 0.1) {
    const GridSpec g = make_grid(1, 1, h);
    return make_scenario(g, nelson_siegel_curve(0.04, -0.02, 0.01, 1.5, 2.0), vol, kZero, n_paths, 1234);
}

}  // namespace

TEST(Quantile, LinearInterpolation) {
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({10, 0}, 0.05), 0.5);
    EXPECT_THROW((void)quantile({}, 0.5), Error);
}

TEST(SimulateYield, ZeroVolEveryPathIsTransport) {
    const YieldScenario sc = scenario(kZero, 5);
    const auto res = simulate_yield(sc, {0, 5, 10}, true);
    const SolutionField base = transport_solution(sc.grid, sc.r0);
    ASSERT_EQ(res.paths.size(), 5u);
    for (const auto& p : res.paths) EXPECT_EQ(p.field.values(), base.field.values());
    for (const auto& sl : res.slices) {
        for (std::size_t j = 0; j < sl.x.size(); ++j) {
            EXPECT_DOUBLE_EQ(sl.mean[j], base(sl.i, j));
            EXPECT_NEAR(sl.variance[j], 0.0, 1e-30);
            EXPECT_EQ(sl.q05[j], sl.q95[j]);
        }
    }
}

TEST(SimulateYield, ConstantVolVarianceLawAndCentering) {
    const YieldScenario sc = scenario(Polynomial::constant(0.1), 2000);
    const auto res = simulate_yield(sc, {5, 10});
    const SolutionField base = transport_solution(sc.grid, sc.r0);
    for (const auto& sl : res.slices) {
        for (std::size_t j : {0u, 5u, 10u}) {
            const double x = sl.x[j];
            const double law = 0.01 * sl.t * (sl.t + x);
            // sd of a sample variance of Gaussians is var * sqrt(2 / (n - 1))
            EXPECT_NEAR(sl.variance[j], law, 3 * law * std::sqrt(2.0 / 1999)) << sl.t << ' ' << x;
            EXPECT_NEAR(sl.mean[j], base(sl.i, j), 3 * std::sqrt(law / 2000));
            EXPECT_LT(sl.q05[j], sl.mean[j]);
            EXPECT_GT(sl.q95[j], sl.mean[j]);
        }
    }
    EXPECT_EQ(res.seeds.size(), 2000u);
    EXPECT_EQ(res.seeds[3], path_seed(1234, 3));
}

TEST(SimulateYield, DeterministicAcrossRuns) {
    const YieldScenario sc = scenario(Polynomial{{{0.02, 1, 0}}}, 50);
    const auto a = simulate_yield(sc, {10});
    const auto b = simulate_yield(sc, {10});
    EXPECT_EQ(a.slices[0].mean, b.slices[0].mean);
    EXPECT_EQ(a.slices[0].variance, b.slices[0].variance);
}

TEST(SimulateYield, RejectsBadInput) {
    YieldScenario sc = scenario(kZero, 1);
    EXPECT_THROW((void)simulate_yield(sc, {11}), Error);
    sc.n_paths = 0;
    EXPECT_THROW((void)simulate_yield(sc, {1}), Error);
    sc = scenario(kZero, 1);
    sc.r0.domain_max = 1.0;
    EXPECT_THROW((void)simulate_yield(sc, {1}), Error);
}

TEST(SlicesCsv, Layout) {
    const YieldScenario sc = scenario(kZero, 2, 0.5);
    std::ostringstream os;
    write_slices_csv(os, simulate_yield(sc, {1}));
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,x,mean,variance,q05,q95");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(DriftDecomposition, ZeroVolIsTaylorRemainder) {
    const YieldScenario sc = scenario(kZero, 1);
    const DiagonalPath w = diagonal_noise(sample_sheet(sc.grid, 1));
    const SolutionField r = solve_closed_form(sc.coefficients(), sc.r0, w);
    double expect_max = 0.0;
    for (std::size_t i = 0; i < sc.grid.n_t; ++i) {
        const double t = sc.grid.t(i), x = sc.grid.x(4);
        expect_max = std::max(expect_max,
                              std::abs(sc.r0.r0(t + sc.grid.h + x) - sc.r0.r0(t + x) - sc.r0.derivative(t + x) * sc.grid.h));
    }
    const auto res = drift_decomposition_residual(r, w, sc, 4);
    EXPECT_NEAR(res.max_abs, expect_max, 1e-15);
    EXPECT_LT(res.max_abs, sc.grid.h * sc.grid.h);
}

TEST(DriftDecomposition, ConstantVolStochasticPartsCancel) {
    const YieldScenario zero = scenario(kZero, 1);
    const YieldScenario sc = scenario(Polynomial::constant(0.3), 1);
    const DiagonalPath w = diagonal_noise(sample_sheet(sc.grid, 2));
    const auto a = drift_decomposition_residual(solve_closed_form(zero.coefficients(), zero.r0, w), w, zero, 3);
    const auto b = drift_decomposition_residual(solve_closed_form(sc.coefficients(), sc.r0, w), w, sc, 3);
    EXPECT_NEAR(a.max_abs, b.max_abs, 1e-14);
    EXPECT_NEAR(a.sum_abs, b.sum_abs, 1e-13);
}

TEST(DriftDecomposition, FixedMaturityFormConvergesForTimeDependentVol) {
    const GridSpec fine = make_grid(1, 1, 1.0 / 256);
    const auto sc_of = [](const GridSpec& g) {
        return make_scenario(g, flat_curve(0.03, 2.0), Polynomial{{{1, 1, 0}}}, kZero, 1, 0);
    };
    std::vector<double> med;
    for (std::size_t f : {16u, 4u, 1u}) {
        std::vector<double> sums;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const SheetSample sheet = restrict_sheet(sample_sheet(fine, derive_seed(9, s)), f);
            const YieldScenario sc = sc_of(sheet.grid());
            const DiagonalPath w = diagonal_noise(sheet);
            const SolutionField r = solve_closed_form(sc.coefficients(), sc.r0, w, IntegralPath::fixed_maturity);
            sums.push_back(drift_decomposition_residual(r, w, sc, sheet.grid().n_x / 2).sum_abs);
        }
        std::nth_element(sums.begin(), sums.begin() + 10, sums.end());
        med.push_back(sums[10]);
    }
    EXPECT_GT(med[0], med[1]);
    EXPECT_GT(med[1], med[2]);
    // roughly h^(1/2): a factor 4 refinement should gain about 2
    EXPECT_GT(med[0] / med[1], 1.4);
}

TEST(MusielaSondermann, DeterministicCases) {
    const GridSpec g = make_grid(1, 1, 0.1);
    const InitialCurve c = nelson_siegel_curve(0.04, -0.02, 0.01, 1.5, 2.0);
    const PlaneFunction zero = [](double, double) { return 0.0; };
    const PlaneFunction one = [](double, double) { return 1.0; };
    const SolutionField still = ms_simulate(zero, zero, c, g, 1);
    const SolutionField drift = ms_simulate(one, zero, c, g, 1);
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            EXPECT_EQ(still(i, j), c.r0(g.x(j)));
            EXPECT_NEAR(drift(i, j), c.r0(g.x(j)) + g.t(i), 1e-14);
        }
    }
}

TEST(MusielaSondermann, WienerVariance) {
    const GridSpec g = make_grid(1, 1, 0.1);
    const PlaneFunction zero = [](double, double) { return 0.0; };
    const PlaneFunction one = [](double, double) { return 1.0; };
    const std::size_t N = 10000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t p = 0; p < N; ++p) {
        const SolutionField r = ms_simulate(zero, one, flat_curve(0, 2), g, ms_path_seed(5, p));
        const double v = r(10, 3);
        s += v;
        s2 += v * v;
    }
    const double var = (s2 - s * s / N) / (N - 1);
    EXPECT_NEAR(var, 1.0, 3 * std::sqrt(2.0 / (N - 1)));
}

TEST(CompareModels, CorrelationStructure) {
    const YieldScenario sc = scenario(Polynomial::constant(1), 4000);
    const MsParams ms{[](double, double) { return 0.0; }, [](double, double) { return 1.0; }};
    const auto rep = compare_models(sc, ms, {5});
    const auto& s = rep.slices[0];
    EXPECT_FALSE(s.ms_degenerate);
    EXPECT_NEAR(s.ms_min_offdiag, 1.0, 1e-12);
    EXPECT_LT(s.spde_max_offdiag, 1.0);
    // increments of B(t, t + x) are masses of L-shaped sets; for x2 >= x1 + h they overlap in area h (t + h + x1)
    const double t = 0.5, h = 0.1, x1 = 0.2, x2 = 0.7;
    const double var1 = h * (2 * t + h + x1);
    const double var2 = h * (2 * t + h + x2);
    const double cov = h * (t + h + x1);
    const double rho = cov / std::sqrt(var1 * var2);
    const double se = (1 - rho * rho) / std::sqrt(4000.0);
    EXPECT_NEAR(s.spde_correlation(2, 7), rho, 3 * se);
}

TEST(CompareModels, ZeroVolIsDegenerate) {
    const YieldScenario sc = scenario(kZero, 20);
    const MsParams ms{[](double, double) { return 0.0; }, [](double, double) { return 0.0; }};
    const auto rep = compare_models(sc, ms, {2});
    EXPECT_TRUE(rep.slices[0].spde_degenerate);
    EXPECT_TRUE(rep.slices[0].ms_degenerate);
    const nlohmann::json j = rep;
    EXPECT_TRUE(j["slices"][0]["spde"]["min_offdiag"].is_null());
    EXPECT_THROW((void)compare_models(sc, ms, {10}), Error);
}
