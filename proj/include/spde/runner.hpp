// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spde/config.hpp"
#include "spde/csv.hpp"
#include "spde/diagnostics.hpp"
#include "spde/gaussian_field.hpp"
#include "spde/solver.hpp"
#include "spde/studies.hpp"
#include "spde/yield_curve.hpp"

namespace spde {

inline constexpr const char* kVersion = "0.1.0";

/// Process exit status for a failure of the given kind.
[[nodiscard]] inline int exit_code_for(ErrorKind k) noexcept {
    switch (k) {
        case ErrorKind::existence: return 3;
        case ErrorKind::io: return 4;
        default: return 2;
    }
}

/// Files produced by a run, held in memory until the run has succeeded.
struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;

    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
    void add_json(std::string name, const nlohmann::json& j) { add(std::move(name), j.dump(2) + "\n"); }
};

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> files;  ///< written, relative to the output directory
    std::string error;               ///< empty on success
};

namespace detail {

[[nodiscard]] inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

[[nodiscard]] inline std::string fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

template <typename F>
std::string to_text(F&& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

[[nodiscard]] inline std::vector<std::size_t> slice_indices(const std::vector<double>& ts, const GridSpec& g) {
    std::vector<std::size_t> out;
    for (double t : ts) out.push_back(lattice_index(t, g.h, g.n_t, "t_slices"));
    return out;
}

[[nodiscard]] inline nlohmann::json json_number(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(v > 0 ? "inf" : "nan");
}

inline void require_existence(const CoefficientSet& cs, const GridSpec& g, double tol, const char* what) {
    const ExistenceReport ex = existence_check(cs, g, tol);
    if (!ex.exists) {
        std::ostringstream msg;
        msg << what << " needs a function-valued solution, which exists only when a = -b; max |a+b| = "
            << ex.max_deviation << " at t=" << ex.t_at << ", x=" << ex.x_at;
        throw Error(ErrorKind::existence, msg.str());
    }
}

// One function per command. Each only fills `out`.

inline void run_simulate(const RunConfig& cfg, Artifacts& out) {
    const GridSpec g = grid_of(cfg);
    const CoefficientSet cs = coefficients_of(cfg);
    const InitialCurve r0 = curve_of(cfg);
    const ExistenceReport ex = existence_check(cs, g, cfg.tolerances.deterministic);
    const SheetSample sheet = sample_sheet(g, cfg.seed);
    const DiagonalPath w = diagonal_noise(sheet);

    bool b_zero = true;
    for (std::size_t i = 0; i <= g.n_t && b_zero; ++i) {
        for (std::size_t j = 0; j <= g.n_sheet_x(); ++j) {
            if (std::abs(cs.b(g.t(i), g.x(j))) > cfg.tolerances.deterministic) {
                b_zero = false;
                break;
            }
        }
    }
    if (!ex.exists && !b_zero) require_existence(cs, g, cfg.tolerances.deterministic, "simulate");

    const IntegralPath path =
        cfg.simulate.path == "fixed_maturity" ? IntegralPath::fixed_maturity : IntegralPath::characteristic;
    SolutionField r = !ex.exists ? solve_b_zero(cs, r0.r0, w.field())
                      : cfg.simulate.formula == "ito"
                          ? solve_ito_form(cs, r0, w, path)
                          : solve_closed_form(cs, r0, w, path);
    r.provenance.seed = cfg.seed;
    const SolutionField base = transport_solution(g, r0);
    double dev = 0.0;
    for (std::size_t i = 0; i <= g.n_t; ++i) {
        for (std::size_t j = 0; j <= g.n_x; ++j) dev = std::max(dev, std::abs(r(i, j) - base(i, j)));
    }
    out.add("solution.csv", to_text([&](std::ostream& os) { r.write_csv(os); }));
    out.add("transport.csv", to_text([&](std::ostream& os) { base.write_csv(os); }));
    out.add("noise.csv", to_text([&](std::ostream& os) { w.write_csv(os); }));
    out.add_json("simulate_report.json", {{"existence", ex},
                                          {"provenance", r.provenance},
                                          {"seed", cfg.seed},
                                          {"sup_deviation_from_transport", dev}});
}

inline void run_qv(const RunConfig& cfg, Artifacts& out) {
    const GridSpec g = grid_of(cfg);
    const CoefficientSet cs = coefficients_of(cfg);
    const auto& q = cfg.qv;
    const QvStudy st = qv_study(cs, g, q.t, q.x_lo, q.x_hi, q.n_values, q.holder_levels, cfg.seed, cfg.n_seeds);

    out.add("qv_convergence.csv", to_text([&](std::ostream& os) {
                csv::write_header(os, {"n", "empirical_qv", "theoretical_qv", "relative_error",
                                       "characteristic_empirical_qv", "characteristic_theoretical_qv",
                                       "characteristic_relative_error"});
                for (std::size_t l = 0; l < st.fixed.size(); ++l) {
                    const auto& f = st.fixed[l];
                    const auto& c = st.characteristic[l];
                    const double row[] = {static_cast<double>(f.n_partitions), f.empirical_qv, f.theoretical_qv,
                                          f.relative_error, c.empirical_qv, c.theoretical_qv, c.relative_error};
                    csv::write_row(os, row);
                }
            }));
    out.add("qv_per_seed.csv", to_text([&](std::ostream& os) {
                csv::write_header(os, {"n", "seed", "qv_fixed_maturity", "qv_characteristic"});
                for (std::size_t l = 0; l < st.fixed.size(); ++l) {
                    const auto& f = st.fixed[l];
                    for (std::size_t s = 0; s < f.per_seed.size(); ++s) {
                        os << f.n_partitions << ',' << f.seeds[s] << ',' << csv::format(f.per_seed[s]) << ','
                           << csv::format(st.characteristic[l].per_seed[s]) << '\n';
                    }
                }
            }));

    const QVReport& last = st.fixed.back();
    nlohmann::json report = st;
    report["existence"] = existence_check(cs, g, cfg.tolerances.deterministic);
    report["target"] = {{"n_partitions", last.n_partitions},
                        {"empirical_qv", last.empirical_qv},
                        {"theoretical_qv", last.theoretical_qv},
                        {"relative_error", last.relative_error},
                        {"tolerance", cfg.tolerances.qv_relative},
                        {"within_tolerance", last.theoretical_qv == 0.0
                                                 ? last.empirical_qv <= cfg.tolerances.deterministic
                                                 : last.relative_error <= cfg.tolerances.qv_relative}};
    if (!st.holder_fixed.empty()) {
        report["holder_median"] = {{"fixed_maturity", json_number(median(st.holder_fixed))},
                                   {"characteristic", json_number(median(st.holder_characteristic))}};
    }
    out.add_json("qv_report.json", report);
}

inline void run_weakform(const RunConfig& cfg, Artifacts& out) {
    const GridSpec g = grid_of(cfg);
    const CoefficientSet cs = coefficients_of(cfg);
    require_existence(cs, g, cfg.tolerances.deterministic, "weakform");
    const auto levels = weakform_study(cs, curve_of(cfg), cfg.grid.t_max, cfg.grid.x_max, cfg.weakform.h_values,
                                       cfg.seed, cfg.n_seeds);
    out.add("weakform_residuals.csv", to_text([&](std::ostream& os) {
                os << "h,seed,test_function_id,residual\n";
                for (const auto& lv : levels) {
                    for (const auto& r : lv.records) {
                        os << csv::format(r.h) << ',' << *r.seed << ',' << r.test_function_id << ','
                           << csv::format(r.residual) << '\n';
                    }
                }
            }));
    bool decreasing = true;
    for (std::size_t l = 1; l < levels.size(); ++l) {
        decreasing = decreasing && levels[l].median_residual < levels[l - 1].median_residual;
    }
    const auto& finest = *std::min_element(levels.begin(), levels.end(),
                                           [](const auto& a, const auto& b) { return a.h < b.h; });
    out.add_json("weakform_report.json", {{"levels", levels},
                                          {"n_seeds", cfg.n_seeds},
                                          {"decreasing", decreasing},
                                          {"finest_h", finest.h},
                                          {"deleted_over_full", finest.median_deleted / finest.median_residual}});
}

inline void run_lemmas(const RunConfig& cfg, Artifacts& out) {
    const GridSpec g = grid_of(cfg);
    const auto& lc = cfg.lemmas;
    const PlaneFunction one = [](double, double) { return 1.0; };
    const RectRegion unit{0.0, 1.0, 0.0, 1.0};
    const double r = lc.disjoint_r, s = lc.disjoint_s;

    const QuadLemReport diag = quadlem_check(g, derive_seed(cfg.seed, 0), lc.quadlem_seeds,
                                             {one, one, unit, unit, lc.quadlem_n, LemmaMode::diagonal});
    const QuadLemReport disj =
        quadlem_check(g, derive_seed(cfg.seed, 1), lc.quadlem_seeds,
                      {one, one, {0.0, r, r, r + 1.0}, {0.0, s, s, s + 1.0}, lc.quadlem_n, LemmaMode::disjoint});
    const PartitionSupReport sup =
        partition_sup_check(g, derive_seed(cfg.seed, 2), lc.sup_seeds, unit, lc.sup_n, lc.kappa);

    out.add("quadlem_convergence.csv", to_text([&](std::ostream& os) {
                os << "mode,n,sup_cell_area,mean,standard_error,l2_distance,limit\n";
                for (const auto* rep : {&diag, &disj}) {
                    for (const auto& l : rep->levels) {
                        os << to_string(rep->mode) << ',' << l.n << ',' << csv::format(l.sup_cell_area) << ','
                           << csv::format(l.mean) << ',' << csv::format(l.standard_error) << ','
                           << csv::format(l.l2_distance) << ',' << csv::format(rep->limit) << '\n';
                    }
                }
            }));
    out.add("partition_sup.csv", to_text([&](std::ostream& os) {
                csv::write_header(os, {"n", "sup_cell_area", "median_sup"});
                for (const auto& l : sup.levels) {
                    const double row[] = {static_cast<double>(l.n), l.sup_cell_area, l.median_sup};
                    csv::write_row(os, row);
                }
            }));
    out.add("lemmas_per_seed.csv", to_text([&](std::ostream& os) {
                os << "check,n,seed,statistic\n";
                const std::pair<const char*, std::uint64_t> quad[] = {{"diagonal", derive_seed(cfg.seed, 0)},
                                                                      {"disjoint", derive_seed(cfg.seed, 1)}};
                for (std::size_t q = 0; q < 2; ++q) {
                    const QuadLemReport& rep = q == 0 ? diag : disj;
                    for (std::size_t l = 0; l < rep.levels.size(); ++l) {
                        for (std::size_t k = 0; k < rep.per_seed[l].size(); ++k) {
                            os << quad[q].first << ',' << rep.levels[l].n << ','
                               << derive_seed(quad[q].second, k) << ',' << csv::format(rep.per_seed[l][k]) << '\n';
                        }
                    }
                }
                for (const auto& l : sup.levels) {
                    for (std::size_t k = 0; k < l.per_seed.size(); ++k) {
                        os << "partition_sup," << l.n << ',' << derive_seed(derive_seed(cfg.seed, 2), k) << ','
                           << csv::format(l.per_seed[k]) << '\n';
                    }
                }
            }));
    out.add_json("lemmas_report.json", {{"diagonal", diag}, {"disjoint", disj}, {"partition_sup", sup}});
}

[[nodiscard]] inline YieldScenario scenario_of(const RunConfig& cfg) {
    return make_scenario(grid_of(cfg), curve_of(cfg), cfg.coefficients.a, cfg.coefficients.c, cfg.n_paths,
                         cfg.seed);
}

inline void run_yield(const RunConfig& cfg, Artifacts& out) {
    const YieldScenario sc = scenario_of(cfg);
    const auto idx = slice_indices(cfg.yield.t_slices, sc.grid);
    const EnsembleResult res = simulate_yield(sc, idx, cfg.yield.keep_paths);
    out.add("yield_slices.csv", to_text([&](std::ostream& os) { write_slices_csv(os, res); }));
    if (cfg.yield.keep_paths) {
        for (std::size_t p = 0; p < res.paths.size(); ++p) {
            std::ostringstream name;
            name << "paths/path_" << std::setw(6) << std::setfill('0') << p << ".csv";
            out.add(name.str(), to_text([&](std::ostream& os) { res.paths[p].write_csv(os); }));
        }
    }
    const SolutionField base = transport_solution(sc.grid, sc.r0);
    nlohmann::json slices = nlohmann::json::array();
    for (const auto& sl : res.slices) {
        double mean_dev = 0.0, max_var = 0.0;
        for (std::size_t j = 0; j < sl.x.size(); ++j) {
            mean_dev = std::max(mean_dev, std::abs(sl.mean[j] - base(sl.i, j)));
            max_var = std::max(max_var, sl.variance[j]);
        }
        slices.push_back({{"t", sl.t}, {"max_abs_mean_minus_transport", mean_dev}, {"max_variance", max_var}});
    }
    out.add_json("yield_report.json", {{"n_paths", res.n_paths},
                                       {"seed", cfg.seed},
                                       {"existence", existence_check(sc.coefficients(), sc.grid,
                                                                     cfg.tolerances.deterministic)},
                                       {"slices", slices}});
}

inline void run_compare(const RunConfig& cfg, Artifacts& out) {
    const YieldScenario sc = scenario_of(cfg);
    const auto idx = slice_indices(cfg.compare.t_slices, sc.grid);
    const ModelComparison cmp = compare_models(sc, {cfg.compare.ms_alpha, cfg.compare.ms_sigma}, idx);
    out.add("compare_summary.csv", to_text([&](std::ostream& os) {
                csv::write_header(os, {"t", "spde_min_corr", "spde_max_corr", "ms_min_corr", "ms_max_corr",
                                       "spde_degenerate", "ms_degenerate"});
                for (const auto& s : cmp.slices) {
                    const double row[] = {s.t,
                                          s.spde_min_offdiag,
                                          s.spde_max_offdiag,
                                          s.ms_min_offdiag,
                                          s.ms_max_offdiag,
                                          s.spde_degenerate ? 1.0 : 0.0,
                                          s.ms_degenerate ? 1.0 : 0.0};
                    csv::write_row(os, row);
                }
            }));
    out.add_json("compare_report.json", cmp);
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << content;
    f.close();
    if (!f) throw Error(ErrorKind::io, "cannot write " + p.string());
}

}  // namespace detail

/// Writes error.json into dir; returns the exit code for the failure.
inline int write_error_record(const std::filesystem::path& dir, ErrorKind kind, const std::string& msg) {
    const int code = exit_code_for(kind);
    try {
        detail::write_file(dir / "error.json", nlohmann::json{{"status", "error"},
                                                              {"kind", to_string(kind)},
                                                              {"message", msg},
                                                              {"exit_code", code}}
                                                       .dump(2) +
                                                   "\n");
    } catch (...) {
    }
    return code;
}

/// Validates, runs the command pipeline and writes every artifact plus
/// effective_config.json and manifest.json. On failure no partial output is
/// left behind; error.json records the failure instead.
inline RunResult run(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    const auto started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir(cfg.output_dir);
    RunResult result;
    std::vector<fs::path> written;

    auto fail = [&](ErrorKind kind, const std::string& msg) {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        result.files.clear();
        result.exit_code = write_error_record(dir, kind, msg);
        result.error = msg;
        return result;
    };

    Artifacts art;
    try {
        validate_config(cfg);
        switch (cfg.command) {
            case Command::simulate: detail::run_simulate(cfg, art); break;
            case Command::qv: detail::run_qv(cfg, art); break;
            case Command::weakform: detail::run_weakform(cfg, art); break;
            case Command::lemmas: detail::run_lemmas(cfg, art); break;
            case Command::yield: detail::run_yield(cfg, art); break;
            case Command::compare: detail::run_compare(cfg, art); break;
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const std::exception& e) {
        return fail(ErrorKind::invalid_argument, e.what());
    }

    const nlohmann::json effective = serialize(cfg);
    art.add_json("effective_config.json", effective);
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& [name, content] : art.files) {
        outputs.push_back({{"name", name}, {"bytes", content.size()}, {"fnv1a64", detail::fnv1a64(content)}});
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const nlohmann::json manifest{
        {"status", "ok"},
        {"tool", "spde_lab"},
        {"version", kVersion},
        {"command", to_string(cfg.command)},
        {"seed", cfg.seed},
        {"inputs", effective},
        {"outputs", outputs},
        {"timing",
         {{"started_utc", detail::utc_timestamp(started)},
          {"finished_utc", detail::utc_timestamp(std::chrono::system_clock::now())},
          {"wall_seconds", wall}}},
    };
    art.add_json("manifest.json", manifest);

    try {
        std::error_code ec;
        fs::remove(dir / "error.json", ec);
        for (const auto& [name, content] : art.files) {
            detail::write_file(dir / name, content);
            written.push_back(dir / name);
            result.files.push_back(name);
        }
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(ErrorKind::io, e.what());
    }
    return result;
}

}  // namespace spde
