// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "json.hpp"
#include "spde/coefficients.hpp"
#include "spde/diagnostics.hpp"
#include "spde/error.hpp"
#include "spde/gaussian_field.hpp"
#include "spde/parallel.hpp"
#include "spde/random.hpp"
#include "spde/solver.hpp"

namespace spde {

/// Forward-curve dynamics dr/dt - dr/dx = vol (dW/dt - dW/dx) + carry W with
/// W(t, x) = B(t, t + x). The coefficient b is always -vol.
struct YieldScenario {
    GridSpec grid;
    InitialCurve r0;
    PlaneFunction vol;
    PlaneFunction carry;
    std::optional<PlaneFunction> dvol_dt;
    std::optional<PlaneFunction> dvol_dx;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] CoefficientSet coefficients() const {
        CoefficientSet cs;
        cs.a = vol;
        cs.b = [v = vol](double t, double x) { return -v(t, x); };
        cs.c = carry;
        cs.fd_step = default_fd_step(grid.h);
        if (dvol_dt && dvol_dx) {
            cs.da_dt = *dvol_dt;
            cs.da_dx = *dvol_dx;
            cs.db_dt = [d = *dvol_dt](double t, double x) { return -d(t, x); };
            cs.db_dx = [d = *dvol_dx](double t, double x) { return -d(t, x); };
        }
        return cs;
    }
};

/// Scenario whose vol and carry are polynomials (analytic partials).
[[nodiscard]] inline YieldScenario make_scenario(const GridSpec& grid, InitialCurve r0, const Polynomial& vol,
                                                 const Polynomial& carry, std::size_t n_paths,
                                                 std::uint64_t seed) {
    return {grid,
            std::move(r0),
            vol,
            carry,
            PlaneFunction(vol.derivative(Axis::t)),
            PlaneFunction(vol.derivative(Axis::x)),
            n_paths,
            seed};
}

inline void validate_scenario(const YieldScenario& sc) {
    if (sc.n_paths < 1) throw Error(ErrorKind::invalid_argument, "scenario needs at least one path");
    if (!sc.vol || !sc.carry) throw Error(ErrorKind::invalid_argument, "scenario vol and carry must be set");
    detail::require_curve_domain(sc.r0, sc.grid);
}

/// Seed of the sheet driving path p of a scenario.
[[nodiscard]] constexpr std::uint64_t path_seed(std::uint64_t scenario_seed, std::size_t p) noexcept {
    return derive_seed(scenario_seed, p);
}

/// One scalar Wiener path per simulation path for the single-driver model,
/// drawn from a stream disjoint from the sheet streams.
[[nodiscard]] constexpr std::uint64_t ms_path_seed(std::uint64_t scenario_seed, std::size_t p) noexcept {
    return derive_seed(mix64(scenario_seed ^ 0x4d757369656c6131ULL), p);
}

/// Pointwise statistics of the ensemble at one time slice.
struct YieldSlice {
    std::size_t i = 0;
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<double> q05;
    std::vector<double> q95;
};

struct EnsembleResult {
    std::size_t n_paths = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<YieldSlice> slices;
    std::vector<SolutionField> paths;  ///< only when requested
};

/// Type-7 (linear interpolation) sample quantile.
[[nodiscard]] inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw Error(ErrorKind::invalid_argument, "quantile of an empty sample");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Independent sheets per path, diagonal noise, closed-form solution; summary
/// statistics at the requested time indices.
[[nodiscard]] inline EnsembleResult simulate_yield(const YieldScenario& sc,
                                                   const std::vector<std::size_t>& slice_indices,
                                                   bool keep_paths = false) {
    validate_scenario(sc);
    const GridSpec& g = sc.grid;
    for (std::size_t i : slice_indices) {
        if (i > g.n_t) throw Error(ErrorKind::misaligned, "slice index outside the grid");
    }
    const CoefficientSet cs = sc.coefficients();
    detail::require_antisymmetric(cs, g, 1e-12);

    struct PathOut {
        std::vector<std::vector<double>> rows;
        std::optional<SolutionField> full;
    };
    auto runs = parallel_map<PathOut>(sc.n_paths, [&](std::size_t p) {
        const SheetSample sheet = sample_sheet(g, path_seed(sc.seed, p));
        SolutionField r = solve_closed_form(cs, sc.r0, diagonal_noise(sheet));
        PathOut out;
        for (std::size_t i : slice_indices) {
            const auto row = r.field.values().row(i);
            out.rows.emplace_back(row.begin(), row.end());
        }
        if (keep_paths) out.full = std::move(r);
        return out;
    });

    EnsembleResult res;
    res.n_paths = sc.n_paths;
    for (std::size_t p = 0; p < sc.n_paths; ++p) res.seeds.push_back(path_seed(sc.seed, p));
    const double n = static_cast<double>(sc.n_paths);
    for (std::size_t s = 0; s < slice_indices.size(); ++s) {
        YieldSlice sl;
        sl.i = slice_indices[s];
        sl.t = g.t(sl.i);
        std::vector<double> column(sc.n_paths);
        for (std::size_t j = 0; j <= g.n_x; ++j) {
            double sum = 0.0;
            for (std::size_t p = 0; p < sc.n_paths; ++p) {
                column[p] = runs[p].rows[s][j];
                sum += column[p];
            }
            const double mean = sum / n;
            double var = 0.0;
            for (double v : column) var += (v - mean) * (v - mean);
            sl.x.push_back(g.x(j));
            sl.mean.push_back(mean);
            sl.variance.push_back(sc.n_paths > 1 ? var / (n - 1.0) : 0.0);
            sl.q05.push_back(quantile(column, 0.05));
            sl.q95.push_back(quantile(column, 0.95));
        }
        res.slices.push_back(std::move(sl));
    }
    if (keep_paths) {
        for (auto& run : runs) res.paths.push_back(std::move(*run.full));
    }
    return res;
}

/// Rows (t, x, mean, variance, q05, q95).
inline void write_slices_csv(std::ostream& os, const EnsembleResult& res) {
    csv::write_header(os, {"t", "x", "mean", "variance", "q05", "q95"});
    for (const auto& sl : res.slices) {
        for (std::size_t j = 0; j < sl.x.size(); ++j) {
            const double row[] = {sl.t, sl.x[j], sl.mean[j], sl.variance[j], sl.q05[j], sl.q95[j]};
            csv::write_row(os, row);
        }
    }
}

struct DriftResidual {
    double max_abs = 0.0;
    double sum_abs = 0.0;
};

/// Per-step residual of the fixed-maturity decomposition
///   dr(t, x) = a dB^x(t) + [B^x(t) (a_x + c)(t, x) + r0'(t + x)] dt
/// at lattice column j: max and sum over steps of
///   |dr_i - a(t_i, x) dB^x_i - [B^x(t_i)(a_x + c)(t_i, x) + r0'(t_i + x)] h|.
[[nodiscard]] inline DriftResidual drift_decomposition_residual(const SolutionField& path,
                                                                const DiagonalPath& noise,
                                                                const YieldScenario& sc, std::size_t j) {
    const GridSpec& g = path.grid();
    require_same_grid(g, noise.grid(), "drift_decomposition_residual");
    if (j > g.n_x) throw Error(ErrorKind::misaligned, "maturity index outside the grid");
    const CoefficientSet cs = sc.coefficients();
    const double x = g.x(j);
    DriftResidual out;
    for (std::size_t i = 0; i < g.n_t; ++i) {
        const double t = g.t(i);
        const double dr = path(i + 1, j) - path(i, j);
        const double dB = noise(i + 1, j) - noise(i, j);
        const double drift = noise(i, j) * (cs.a_x(t, x) + cs.c(t, x)) + sc.r0.derivative(t + x);
        const double res = std::abs(dr - cs.a(t, x) * dB - drift * g.h);
        out.max_abs = std::max(out.max_abs, res);
        out.sum_abs += res;
    }
    return out;
}

/// Euler-Maruyama for dr(t, x) = alpha(t, x) dt + sigma(t, x) dW(t), one scalar
/// Wiener path shared by every maturity.
[[nodiscard]] inline SolutionField ms_simulate(const PlaneFunction& alpha, const PlaneFunction& sigma,
                                               const InitialCurve& r0, const GridSpec& grid,
                                               std::uint64_t seed) {
    if (!r0.r0) throw Error(ErrorKind::invalid_argument, "initial curve is empty");
    if (r0.domain_max + 1e-12 * grid.x_max < grid.x_max) {
        throw Error(ErrorKind::domain, "initial curve does not cover [0, x_max]");
    }
    NormalStream normal(seed);
    const double sqrt_h = std::sqrt(grid.h);
    ScalarField f(grid);
    for (std::size_t j = 0; j <= grid.n_x; ++j) f(0, j) = r0.r0(grid.x(j));
    for (std::size_t i = 0; i < grid.n_t; ++i) {
        const double dW = sqrt_h * normal();
        const double t = grid.t(i);
        for (std::size_t j = 0; j <= grid.n_x; ++j) {
            const double x = grid.x(j);
            f(i + 1, j) = f(i, j) + alpha(t, x) * grid.h + sigma(t, x) * dW;
        }
    }
    return {std::move(f), {Formula::transport, std::nullopt, seed, std::nullopt}};
}

struct MsParams {
    PlaneFunction alpha;
    PlaneFunction sigma;
};

/// Cross-maturity correlation of increments r(t_{i+1}, .) - r(t_i, .) under
/// both models at one slice.
struct ModelComparisonSlice {
    std::size_t i = 0;
    double t = 0.0;
    Matrix spde_correlation;
    Matrix ms_correlation;
    bool spde_degenerate = false;  ///< some maturity has zero increment variance
    bool ms_degenerate = false;
    double spde_min_offdiag = std::numeric_limits<double>::quiet_NaN();
    double spde_max_offdiag = std::numeric_limits<double>::quiet_NaN();
    double ms_min_offdiag = std::numeric_limits<double>::quiet_NaN();
    double ms_max_offdiag = std::numeric_limits<double>::quiet_NaN();
};

struct ModelComparison {
    std::size_t n_paths = 0;
    std::vector<ModelComparisonSlice> slices;
};

namespace detail {

/// Correlation matrix of the columns of samples (rows = paths). Columns with
/// zero variance produce NaN entries and set `degenerate`.
inline Matrix correlation_matrix(const Matrix& samples, bool& degenerate, double& min_off, double& max_off) {
    const std::size_t n = samples.rows(), d = samples.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += samples(p, j);
    }
    for (double& m : mean) m /= static_cast<double>(n);
    Matrix cov(d, d, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t a = 0; a < d; ++a) {
            const double da = samples(p, a) - mean[a];
            for (std::size_t b = a; b < d; ++b) cov(a, b) += da * (samples(p, b) - mean[b]);
        }
    }
    degenerate = false;
    min_off = std::numeric_limits<double>::infinity();
    max_off = -std::numeric_limits<double>::infinity();
    Matrix corr(d, d, 0.0);
    for (std::size_t a = 0; a < d; ++a) {
        if (!(cov(a, a) > 0.0)) degenerate = true;
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            const double denom = std::sqrt(cov(a, a) * cov(b, b));
            const double c = denom > 0.0 ? cov(a, b) / denom : std::numeric_limits<double>::quiet_NaN();
            corr(a, b) = corr(b, a) = c;
            if (a != b && std::isfinite(c)) {
                min_off = std::min(min_off, c);
                max_off = std::max(max_off, c);
            }
        }
    }
    if (degenerate) {
        min_off = max_off = std::numeric_limits<double>::quiet_NaN();
    }
    return corr;
}

}  // namespace detail

/// Runs the diagonal-noise model of the scenario and the single-driver model
/// on the same grid and path count and compares increment correlations.
[[nodiscard]] inline ModelComparison compare_models(const YieldScenario& sc, const MsParams& ms,
                                                    const std::vector<std::size_t>& slice_indices) {
    validate_scenario(sc);
    const GridSpec& g = sc.grid;
    for (std::size_t i : slice_indices) {
        if (i >= g.n_t) throw Error(ErrorKind::misaligned, "increment slice must satisfy i < n_t");
    }
    const CoefficientSet cs = sc.coefficients();
    detail::require_antisymmetric(cs, g, 1e-12);
    const std::size_t d = g.n_x + 1;

    struct PathIncrements {
        std::vector<std::vector<double>> spde, ms;
    };
    const auto runs = parallel_map<PathIncrements>(sc.n_paths, [&](std::size_t p) {
        const SolutionField r =
            solve_closed_form(cs, sc.r0, diagonal_noise(sample_sheet(g, path_seed(sc.seed, p))));
        const SolutionField q = ms_simulate(ms.alpha, ms.sigma, sc.r0, g, ms_path_seed(sc.seed, p));
        PathIncrements out;
        for (std::size_t i : slice_indices) {
            std::vector<double> a(d), b(d);
            for (std::size_t j = 0; j < d; ++j) {
                a[j] = r(i + 1, j) - r(i, j);
                b[j] = q(i + 1, j) - q(i, j);
            }
            out.spde.push_back(std::move(a));
            out.ms.push_back(std::move(b));
        }
        return out;
    });

    ModelComparison rep;
    rep.n_paths = sc.n_paths;
    for (std::size_t s = 0; s < slice_indices.size(); ++s) {
        Matrix a(sc.n_paths, d), b(sc.n_paths, d);
        for (std::size_t p = 0; p < sc.n_paths; ++p) {
            for (std::size_t j = 0; j < d; ++j) {
                a(p, j) = runs[p].spde[s][j];
                b(p, j) = runs[p].ms[s][j];
            }
        }
        ModelComparisonSlice sl;
        sl.i = slice_indices[s];
        sl.t = g.t(sl.i);
        sl.spde_correlation = detail::correlation_matrix(a, sl.spde_degenerate, sl.spde_min_offdiag,
                                                         sl.spde_max_offdiag);
        sl.ms_correlation =
            detail::correlation_matrix(b, sl.ms_degenerate, sl.ms_min_offdiag, sl.ms_max_offdiag);
        rep.slices.push_back(std::move(sl));
    }
    return rep;
}

namespace detail {

inline nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json matrix_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t a = 0; a < m.rows(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (double v : m.row(a)) row.push_back(finite_or_null(v));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const ModelComparison& c) {
    j = nlohmann::json{{"n_paths", c.n_paths}, {"slices", nlohmann::json::array()}};
    for (const auto& s : c.slices) {
        j["slices"].push_back({{"i", s.i},
                               {"t", s.t},
                               {"spde",
                                {{"degenerate", s.spde_degenerate},
                                 {"min_offdiag", detail::finite_or_null(s.spde_min_offdiag)},
                                 {"max_offdiag", detail::finite_or_null(s.spde_max_offdiag)},
                                 {"correlation", detail::matrix_json(s.spde_correlation)}}},
                               {"musiela_sondermann",
                                {{"degenerate", s.ms_degenerate},
                                 {"min_offdiag", detail::finite_or_null(s.ms_min_offdiag)},
                                 {"max_offdiag", detail::finite_or_null(s.ms_max_offdiag)},
                                 {"correlation", detail::matrix_json(s.ms_correlation)}}}});
    }
}

}  // namespace spde
