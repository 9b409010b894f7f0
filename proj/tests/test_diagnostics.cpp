// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "spde/diagnostics.hpp"
#include "spde/studies.hpp"

using namespace spde;

namespace {

const Polynomial kT{{{1.0, 1, 0}}};

CoefficientSet a_only(const Polynomial& a) {
    return make_coefficients(a, Polynomial::constant(0), Polynomial::constant(0));
}

}  // namespace

TEST(Existence, ReferenceExamples) {
    const GridSpec g = make_grid(1, 1, 0.1);
    const auto yes = existence_check(make_antisymmetric(kT, Polynomial::constant(0)), g);
    EXPECT_TRUE(yes.exists);
    EXPECT_EQ(yes.max_deviation, 0.0);
    const auto no = existence_check(
        make_coefficients(Polynomial::constant(1), Polynomial::constant(1), Polynomial::constant(0)), g);
    EXPECT_FALSE(no.exists);
    EXPECT_DOUBLE_EQ(no.max_deviation, 2.0);
    const auto near = existence_check(
        make_coefficients(Polynomial::constant(1), Polynomial::constant(-1 + 1e-9), Polynomial::constant(0)), g, 1e-6);
    EXPECT_TRUE(near.exists);
}

TEST(Existence, ReportsLocationOfWorstDeviation) {
    const GridSpec g = make_grid(1, 1, 0.25);
    const auto r = existence_check(make_coefficients(kT, Polynomial::constant(0), Polynomial::constant(0)), g);
    EXPECT_DOUBLE_EQ(r.max_deviation, 1.0);
    EXPECT_DOUBLE_EQ(r.t_at, 1.0);
    const nlohmann::json j = r;
    EXPECT_FALSE(j["exists"].get<bool>());
}

TEST(BuildZ, VanishesForAntisymmetricAndAtTimeZero) {
    const GridSpec g = make_grid(1, 1, 0.05);
    const SheetSample s = sample_sheet(g, 3);
    for (double v : build_z(make_antisymmetric(kT, Polynomial::constant(0)), s, 20).values) EXPECT_EQ(v, 0.0);
    for (double v : build_z(a_only(Polynomial::constant(1)), s, 0).values) EXPECT_EQ(v, 0.0);
    for (double v : build_z_characteristic(make_antisymmetric(kT, Polynomial::constant(0)), s, 20).values) {
        EXPECT_EQ(v, 0.0);
    }
    EXPECT_THROW((void)build_z(a_only(Polynomial::constant(1)), s, 21), Error);
}

TEST(BuildZ, VarianceMatchesCovarianceOracle) {
    // A = 1, t = 1, x = 0: Var Z = int int min(u, v)^2 du dv = 1/6
    const GridSpec g = make_grid(1, 1, 0.02);
    const std::size_t N = 3000;
    std::vector<double> z(N);
    for (std::size_t k = 0; k < N; ++k) z[k] = build_z(a_only(Polynomial::constant(1)), sample_sheet(g, derive_seed(5, k)), 50).values[0];
    double m = 0.0;
    for (double v : z) m += v;
    m /= N;
    double var = 0.0;
    for (double v : z) var += (v - m) * (v - m);
    var /= N - 1;
    const double se = std::sqrt(2.0 / (N - 1)) * (1.0 / 6.0);
    EXPECT_NEAR(m, 0.0, 3 * std::sqrt(1.0 / 6.0 / N));
    EXPECT_NEAR(var, 1.0 / 6.0, 3 * se + 0.01);  // lattice bias is O(h)
}

TEST(QvEstimate, ZeroAndLinearProfiles) {
    LineProfile zero{1.0, 0.01, std::vector<double>(101, 0.0)};
    EXPECT_EQ(qv_estimate(zero, 0.0, 1.0, 20), 0.0);
    LineProfile lin{1.0, 0.01, {}};
    for (int j = 0; j <= 100; ++j) lin.values.push_back(3.0 * 0.01 * j);
    EXPECT_NEAR(qv_estimate(lin, 0.0, 1.0, 20), 9.0 / 20.0, 1e-12);
    EXPECT_NEAR(qv_estimate(lin, 0.0, 1.0, 100), 9.0 / 100.0, 1e-12);
    EXPECT_THROW((void)qv_estimate(lin, 0.0, 1.0, 30), Error);
    EXPECT_THROW((void)qv_estimate(lin, 0.0, 1.005, 10), Error);
}

TEST(QvTheoretical, AnalyticValues) {
    EXPECT_NEAR(qv_theoretical(a_only(Polynomial::constant(1)), 1, 0, 1), 0.5, 1e-12);
    EXPECT_NEAR(qv_theoretical(a_only(Polynomial{{{1, 0, 1}}}), 1, 0, 1), 1.0 / 6.0, 1e-12);
    EXPECT_EQ(qv_theoretical(make_antisymmetric(kT, Polynomial::constant(0)), 1, 0, 1), 0.0);
    EXPECT_NEAR(qv_theoretical_characteristic(a_only(Polynomial::constant(1)), 1, 0, 1), 1.0 / 3.0, 1e-12);
}

TEST(QvStudy, AntisymmetricGivesExactZeroQv) {
    const GridSpec g = make_grid(1, 1, 1.0 / 64);
    const auto st = qv_study(make_antisymmetric(kT, Polynomial::constant(0)), g, 1, 0, 1, {16, 64}, {}, 1, 3);
    for (const auto& r : st.fixed) {
        EXPECT_EQ(r.empirical_qv, 0.0);
        EXPECT_EQ(r.theoretical_qv, 0.0);
    }
}

TEST(QvStudy, CharacteristicZHasBrownianQv) {
    const GridSpec g = make_grid(1, 1, 1.0 / 512);
    const auto st = qv_study(a_only(Polynomial::constant(1)), g, 1, 0, 1, {128}, {64, 128, 256, 512}, 2, 20);
    EXPECT_NEAR(st.characteristic[0].empirical_qv, 1.0 / 3.0, 0.1);
    EXPECT_LT(st.fixed[0].empirical_qv, 0.05);
    // max-increment regression sits a little below 1/2 because of the log factor in Levy's modulus
    EXPECT_NEAR(median(st.holder_characteristic), 0.5, 0.15);
    EXPECT_GT(median(st.holder_fixed), 0.8);
}

TEST(Holder, LipschitzAndDegenerate) {
    LineProfile lin{1.0, 1.0 / 64, {}};
    for (int j = 0; j <= 64; ++j) lin.values.push_back(j / 64.0);
    const auto r = holder_estimate(lin, 0, 1, {4, 8, 16, 32, 64});
    EXPECT_NEAR(r.estimated_exponent, 1.0, 1e-9);
    EXPECT_FALSE(r.degenerate);
    LineProfile c{1.0, 1.0 / 64, std::vector<double>(65, 2.0)};
    const auto d = holder_estimate(c, 0, 1, {4, 8, 16});
    EXPECT_TRUE(d.degenerate);
    EXPECT_TRUE(std::isinf(d.estimated_exponent));
    EXPECT_THROW((void)holder_estimate(lin, 0, 1, {4, 8}), Error);
}

TEST(Separability, Examples) {
    const GridSpec g = make_grid(1, 1, 0.1);
    EXPECT_NEAR(separability_residual(sample_field(g, [](double t, double x) { return std::sin(t) + x * x; })), 0.0,
                1e-15);
    EXPECT_NEAR(separability_residual(sample_field(g, [](double t, double x) { return t * x; })), 1.0, 1e-15);
}

TEST(Partitions, SlabsCoverBaseWithEqualArea) {
    const GridSpec g = make_grid(1, 1, 1.0 / 16);
    const auto p = make_slab_partition({0, 1, 0.5, 1.5}, 4, g);
    ASSERT_EQ(p.cells.size(), 4u);
    double total = 0.0;
    for (const auto& c : p.cells) total += c.area();
    EXPECT_DOUBLE_EQ(total, 1.0);
    EXPECT_DOUBLE_EQ(p.sup_area(), 0.25);
    EXPECT_THROW((void)make_slab_partition({0, 1, 0, 1}, 3, g), Error);
    const auto tp = make_slab_partition({0, 1, 0, 1}, 2, g, Axis::t);
    EXPECT_DOUBLE_EQ(tp.cells[1].t_lo, 0.5);
}

TEST(Partitions, LemmaGeometryValidation) {
    const GridSpec g = make_grid(1, 1, 1.0 / 16);
    const auto f = make_slab_partition({0, 1, 0, 1}, 4, g);
    EXPECT_NO_THROW(validate_lemma_geometry(f, f, LemmaMode::diagonal));
    EXPECT_THROW(validate_lemma_geometry(f, f, LemmaMode::disjoint), Error);
    const auto a = make_slab_partition({0, 0.5, 0.5, 1.5}, 4, g);
    const auto b = make_slab_partition({0, 0.75, 0.75, 1.75}, 4, g);
    EXPECT_NO_THROW(validate_lemma_geometry(a, b, LemmaMode::disjoint));
    const auto shifted = make_slab_partition({0, 1, 0.25, 1.25}, 4, g);
    EXPECT_THROW(validate_lemma_geometry(f, shifted, LemmaMode::diagonal), Error);
}

TEST(QuadLem, ZeroWeightGivesZeroSum) {
    const GridSpec g = make_grid(1, 1, 1.0 / 16);
    const PlaneFunction zero = [](double, double) { return 0.0; };
    const PlaneFunction one = [](double, double) { return 1.0; };
    const auto rep = quadlem_check(g, 1, 5, {zero, one, {0, 1, 0, 1}, {0, 1, 0, 1}, {4, 16}, LemmaMode::diagonal});
    EXPECT_EQ(rep.limit, 0.0);
    for (const auto& l : rep.levels) {
        EXPECT_EQ(l.mean, 0.0);
        EXPECT_EQ(l.l2_distance, 0.0);
    }
}

TEST(QuadLem, DiagonalLimitIsIntegralOfRS) {
    const GridSpec g = make_grid(1, 1, 1.0 / 32);
    const PlaneFunction r = [](double t, double) { return t; };
    const PlaneFunction one = [](double, double) { return 1.0; };
    const auto rep = quadlem_check(g, 4, 200, {r, one, {0, 1, 0, 1}, {0, 1, 0, 1}, {32}, LemmaMode::diagonal});
    EXPECT_NEAR(rep.limit, 0.5, 1e-12);
    EXPECT_NEAR(rep.levels[0].mean, 0.5, 4 * rep.levels[0].standard_error);
}

TEST(PartitionSup, SingleCellAndDegenerateSet) {
    const GridSpec g = make_grid(1, 1, 1.0 / 8);
    const auto one = partition_sup_check(g, 3, 400, {0, 1, 0, 1}, {1});
    double s2 = 0.0;
    for (double v : one.levels[0].per_seed) s2 += v * v;
    EXPECT_NEAR(s2 / 400, 1.0, 0.25);  // |N(0, 1)|^2 has mean 1
    const auto flat = partition_sup_check(g, 3, 5, {0.5, 0.5, 0, 1}, {2, 4});
    for (const auto& l : flat.levels) EXPECT_EQ(l.median_sup, 0.0);
    EXPECT_THROW((void)partition_sup_check(g, 3, 5, {0, 1, 0, 1}, {2}, 1.0), Error);
}

TEST(Median, EvenAndOdd) {
    EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
    EXPECT_DOUBLE_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_THROW((void)median({}), Error);
    EXPECT_NEAR(relative_error(0.55, 0.5), 0.1, 1e-12);
    EXPECT_DOUBLE_EQ(relative_error(0.25, 0.0), 0.25);
}
