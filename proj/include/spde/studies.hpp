// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "spde/diagnostics.hpp"
#include "spde/gaussian_field.hpp"
#include "spde/operators.hpp"
#include "spde/parallel.hpp"
#include "spde/random.hpp"
#include "spde/solver.hpp"
#include "spde/test_function.hpp"

// Multi-seed experiments built from the primitives. Every sheet is drawn at
// the finest step and restricted to coarser lattices, so all levels of a
// refinement see the same realisation.

namespace spde {

/// Integer factor relating a coarse step to a fine one; throws if the ratio is
/// not (numerically) an integer.
[[nodiscard]] inline std::size_t refinement_factor(double coarse_h, double fine_h) {
    const double r = coarse_h / fine_h;
    const double k = std::round(r);
    if (k < 1.0 || std::abs(r - k) > 1e-9 * k) {
        throw Error(ErrorKind::misaligned, "step " + csv::format(coarse_h) +
                                               " is not an integer multiple of the finest step " +
                                               csv::format(fine_h));
    }
    return static_cast<std::size_t>(k);
}

// ---------------------------------------------------------------------------
// Quadratic variation of Z

struct QvStudy {
    std::vector<QVReport> fixed;           ///< Z at fixed x (build_z)
    std::vector<QVReport> characteristic;  ///< Z along characteristics
    std::vector<double> holder_fixed;      ///< per-seed Hoelder exponents
    std::vector<double> holder_characteristic;
};

inline void to_json(nlohmann::json& j, const QvStudy& s) {
    auto per_seed = [](const std::vector<QVReport>& reps) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : reps) {
            nlohmann::json e = r;
            e["per_seed"] = r.per_seed;
            out.push_back(std::move(e));
        }
        return out;
    };
    auto finite = [](const std::vector<double>& v) {
        nlohmann::json out = nlohmann::json::array();
        for (double x : v) out.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json("inf"));
        return out;
    };
    j = nlohmann::json{{"fixed_maturity", per_seed(s.fixed)},
                       {"characteristic", per_seed(s.characteristic)},
                       {"holder",
                        {{"fixed_maturity", finite(s.holder_fixed)},
                         {"characteristic", finite(s.holder_characteristic)}}}};
}

/// For each seed: one sheet, Z(t, .) in both forms, qv_estimate at every n and
/// Hoelder exponents over `holder_levels` (skipped when empty).
[[nodiscard]] inline QvStudy qv_study(const CoefficientSet& cs, const GridSpec& grid, double t, double x_lo,
                                      double x_hi, const std::vector<std::size_t>& n_values,
                                      const std::vector<std::size_t>& holder_levels, std::uint64_t base_seed,
                                      std::size_t n_seeds) {
    if (n_seeds == 0) throw Error(ErrorKind::invalid_argument, "qv_study needs at least one seed");
    const std::size_t i = lattice_index(t, grid.h, grid.n_t, "t");
    struct SeedOut {
        std::vector<double> qf, qc;
        double hf = 0.0, hc = 0.0;
    };
    const auto runs = parallel_map<SeedOut>(n_seeds, [&](std::size_t s) {
        const SheetSample sheet = sample_sheet(grid, derive_seed(base_seed, s));
        const LineProfile zf = build_z(cs, sheet, i);
        const LineProfile zc = build_z_characteristic(cs, sheet, i);
        SeedOut out;
        for (std::size_t n : n_values) {
            out.qf.push_back(qv_estimate(zf, x_lo, x_hi, n));
            out.qc.push_back(qv_estimate(zc, x_lo, x_hi, n));
        }
        if (!holder_levels.empty()) {
            out.hf = holder_estimate(zf, x_lo, x_hi, holder_levels).estimated_exponent;
            out.hc = holder_estimate(zc, x_lo, x_hi, holder_levels).estimated_exponent;
        }
        return out;
    });

    QvStudy st;
    const double th_f = qv_theoretical(cs, t, x_lo, x_hi);
    const double th_c = qv_theoretical_characteristic(cs, t, x_lo, x_hi);
    for (std::size_t l = 0; l < n_values.size(); ++l) {
        QVReport f{t, x_lo, x_hi, n_values[l], 0.0, th_f, 0.0, {}, {}};
        QVReport c{t, x_lo, x_hi, n_values[l], 0.0, th_c, 0.0, {}, {}};
        for (std::size_t s = 0; s < n_seeds; ++s) {
            f.seeds.push_back(derive_seed(base_seed, s));
            c.seeds.push_back(derive_seed(base_seed, s));
            f.per_seed.push_back(runs[s].qf[l]);
            c.per_seed.push_back(runs[s].qc[l]);
        }
        f.empirical_qv = median(f.per_seed);
        c.empirical_qv = median(c.per_seed);
        f.relative_error = relative_error(f.empirical_qv, th_f);
        c.relative_error = relative_error(c.empirical_qv, th_c);
        st.fixed.push_back(std::move(f));
        st.characteristic.push_back(std::move(c));
    }
    if (!holder_levels.empty()) {
        for (const auto& r : runs) {
            st.holder_fixed.push_back(r.hf);
            st.holder_characteristic.push_back(r.hc);
        }
    }
    return st;
}

// ---------------------------------------------------------------------------
// Weak-form residuals under refinement

struct WeakformLevel {
    double h = 0.0;
    double median_residual = 0.0;  ///< median over seeds of the battery mean
    double median_deleted = 0.0;   ///< same for r = aW + r0 (time integral removed)
    std::vector<ResidualRecord> records;
};

inline void to_json(nlohmann::json& j, const WeakformLevel& l) {
    j = nlohmann::json{{"h", l.h}, {"median_residual", l.median_residual}, {"median_deleted", l.median_deleted}};
}

/// Residual of solve_closed_form (characteristic form) in the transport weak
/// form, averaged over the standard battery, for each step in h_values.
[[nodiscard]] inline std::vector<WeakformLevel> weakform_study(const CoefficientSet& cs, const InitialCurve& r0,
                                                               double t_max, double x_max,
                                                               const std::vector<double>& h_values,
                                                               std::uint64_t base_seed, std::size_t n_seeds) {
    if (h_values.empty() || n_seeds == 0) {
        throw Error(ErrorKind::invalid_argument, "weakform_study needs steps and seeds");
    }
    const double h_fine = *std::min_element(h_values.begin(), h_values.end());
    const GridSpec fine = make_grid(t_max, x_max, h_fine);
    std::vector<std::size_t> factors;
    std::vector<GridSpec> grids;
    std::vector<std::vector<NamedTestFunction>> batteries;
    std::vector<std::vector<WeakFormKernel>> kernels;
    const OperatorD op{cs};
    for (double h : h_values) {
        factors.push_back(refinement_factor(h, h_fine));
        grids.push_back(coarsen(fine, factors.back()));
        batteries.push_back(standard_battery(grids.back()));
        std::vector<WeakFormKernel> ks;
        for (const auto& b : batteries.back()) ks.push_back(transport_kernel(op, b.tf, grids.back()));
        kernels.push_back(std::move(ks));
    }

    struct SeedOut {
        std::vector<std::vector<double>> full, deleted;
    };
    const auto runs = parallel_map<SeedOut>(n_seeds, [&](std::size_t s) {
        const SheetSample sheet = sample_sheet(fine, derive_seed(base_seed, s));
        SeedOut out;
        for (std::size_t l = 0; l < h_values.size(); ++l) {
            const SheetSample coarse = restrict_sheet(sheet, factors[l]);
            const DiagonalPath w = diagonal_noise(coarse);
            const ScalarField wf = w.field();
            const SolutionField r = solve_closed_form(cs, r0, w);
            const GridSpec& g = grids[l];
            ScalarField del(g);
            for (std::size_t i = 0; i <= g.n_t; ++i) {
                for (std::size_t j = 0; j <= g.n_x; ++j) {
                    del(i, j) = cs.a(g.t(i), g.x(j)) * wf(i, j) + detail::curve_at(r0, g, i, j);
                }
            }
            std::vector<double> f, d;
            for (const auto& k : kernels[l]) {
                f.push_back(weak_residual(k, r.field, wf));
                d.push_back(weak_residual(k, del, wf));
            }
            out.full.push_back(std::move(f));
            out.deleted.push_back(std::move(d));
        }
        return out;
    });

    std::vector<WeakformLevel> levels;
    for (std::size_t l = 0; l < h_values.size(); ++l) {
        WeakformLevel lv;
        lv.h = h_values[l];
        std::vector<double> full_means, del_means;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            double fm = 0.0, dm = 0.0;
            const auto& bat = batteries[l];
            for (std::size_t b = 0; b < bat.size(); ++b) {
                fm += runs[s].full[l][b];
                dm += runs[s].deleted[l][b];
                lv.records.push_back({h_values[l], derive_seed(base_seed, s), bat[b].id, runs[s].full[l][b]});
            }
            full_means.push_back(fm / static_cast<double>(bat.size()));
            del_means.push_back(dm / static_cast<double>(bat.size()));
        }
        lv.median_residual = median(full_means);
        lv.median_deleted = median(del_means);
        levels.push_back(std::move(lv));
    }
    return levels;
}

// ---------------------------------------------------------------------------
// Closed form vs Ito form

/// sup over the lattice of |solve_closed_form - solve_ito_form| for one noise.
[[nodiscard]] inline double representation_gap(const CoefficientSet& cs, const InitialCurve& r0,
                                               const DiagonalPath& w,
                                               IntegralPath path = IntegralPath::characteristic) {
    const SolutionField a = solve_closed_form(cs, r0, w, path);
    const SolutionField b = solve_ito_form(cs, r0, w, path);
    const GridSpec& g = w.grid();
    double sup = 0.0;
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; j <= g.n_x; ++j) sup = std::max(sup, std::abs(a(i, j) - b(i, j)));
    }
    return sup;
}

// ---------------------------------------------------------------------------
// Integrated identity for b = 0 under refinement

struct IdentityLevel {
    double h = 0.0;
    double median_gap = 0.0;  ///< median over seeds of |LHS - RHS| at (t_max, x_max)
    std::vector<double> per_seed;
};

inline void to_json(nlohmann::json& j, const IdentityLevel& l) {
    j = nlohmann::json{{"h", l.h}, {"median_gap", l.median_gap}};
}

/// U from solve_b_zero on a fine lattice, restricted to each coarse step, and
/// the two sides of the integrated identity evaluated there.
[[nodiscard]] inline std::vector<IdentityLevel> identity_study(const CoefficientSet& cs, const LineFunction& u0,
                                                               double t_max, double x_max, double h_fine,
                                                               const std::vector<std::size_t>& factors,
                                                               std::uint64_t base_seed, std::size_t n_seeds) {
    const GridSpec fine = make_grid(t_max, x_max, h_fine);
    const auto runs = parallel_map<std::vector<double>>(n_seeds, [&](std::size_t s) {
        const ScalarField w = diagonal_noise(sample_sheet(fine, derive_seed(base_seed, s))).field();
        const SolutionField u = solve_b_zero(cs, u0, w);
        std::vector<double> gaps;
        for (std::size_t f : factors) {
            const ScalarField uc = restrict_field(u.field, f);
            const ScalarField wc = restrict_field(w, f);
            const auto [lhs, rhs] =
                b_zero_identity_sides(cs, uc, wc, uc.grid().n_t, uc.grid().n_x);
            gaps.push_back(std::abs(lhs - rhs));
        }
        return gaps;
    });
    std::vector<IdentityLevel> out;
    for (std::size_t l = 0; l < factors.size(); ++l) {
        IdentityLevel lv;
        lv.h = h_fine * static_cast<double>(factors[l]);
        for (const auto& r : runs) lv.per_seed.push_back(r[l]);
        lv.median_gap = median(lv.per_seed);
        out.push_back(std::move(lv));
    }
    return out;
}

}  // namespace spde
