// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spde/coefficients.hpp"
#include "spde/diagnostics.hpp"
#include "spde/error.hpp"
#include "spde/grid.hpp"
#include "spde/solver.hpp"

// Run configuration: a JSON document with nested sections. Every field has a
// default; defaults that depend on the command are filled before the document
// is applied, and the fully materialised config is what gets echoed back.

namespace spde {

enum class Command { simulate, qv, weakform, lemmas, yield, compare };

[[nodiscard]] inline const char* to_string(Command c) noexcept {
    switch (c) {
        case Command::simulate: return "simulate";
        case Command::qv: return "qv";
        case Command::weakform: return "weakform";
        case Command::lemmas: return "lemmas";
        case Command::yield: return "yield";
        case Command::compare: return "compare";
    }
    return "unknown";
}

[[nodiscard]] inline std::optional<Command> parse_command(const std::string& s) {
    for (Command c : {Command::simulate, Command::qv, Command::weakform, Command::lemmas, Command::yield,
                      Command::compare}) {
        if (s == to_string(c)) return c;
    }
    return std::nullopt;
}

struct GridConfig {
    double t_max = 1.0;
    double x_max = 1.0;
    double h = 0.05;
    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// a, b, c of the operator. For yield and compare, a is the volatility and c
/// the carry; b must equal -a.
struct CoefficientConfig {
    Polynomial a = Polynomial::constant(1.0);
    Polynomial b = Polynomial::constant(0.0);
    Polynomial c = Polynomial::constant(0.0);
    friend bool operator==(const CoefficientConfig&, const CoefficientConfig&) = default;
};

/// Initial curve. kind: "flat" (level), "nelson_siegel" (beta0..2, tau) or
/// "poly" (terms [coef, power] of x).
struct CurveConfig {
    std::string kind = "nelson_siegel";
    double level = 0.03;
    double beta0 = 0.04;
    double beta1 = -0.02;
    double beta2 = 0.01;
    double tau = 1.5;
    std::vector<std::pair<double, int>> poly;
    friend bool operator==(const CurveConfig&, const CurveConfig&) = default;
};

struct ToleranceConfig {
    double qv_relative = 0.1;
    double standard_errors = 3.0;
    double deterministic = 1e-9;
    friend bool operator==(const ToleranceConfig&, const ToleranceConfig&) = default;
};

struct SimulateConfig {
    std::string formula = "closed_form";  ///< closed_form | ito
    std::string path = "characteristic";
    friend bool operator==(const SimulateConfig&, const SimulateConfig&) = default;
};

struct QvConfig {
    double t = 1.0;
    double x_lo = 0.0;
    double x_hi = 1.0;
    std::vector<std::size_t> n_values{16, 32, 64, 128, 256};
    std::vector<std::size_t> holder_levels{16, 32, 64, 128, 256};
    friend bool operator==(const QvConfig&, const QvConfig&) = default;
};

struct WeakformConfig {
    std::vector<double> h_values{0.04, 0.02, 0.01};
    friend bool operator==(const WeakformConfig&, const WeakformConfig&) = default;
};

struct LemmasConfig {
    std::size_t quadlem_seeds = 1000;
    std::vector<std::size_t> quadlem_n{8, 32, 128};
    double disjoint_r = 0.5;
    double disjoint_s = 0.75;
    std::size_t sup_seeds = 20;
    std::vector<std::size_t> sup_n{4, 16, 64, 256};
    double kappa = 0.5;
    friend bool operator==(const LemmasConfig&, const LemmasConfig&) = default;
};

struct YieldConfig {
    std::vector<double> t_slices{0.5, 1.0};
    bool keep_paths = false;
    friend bool operator==(const YieldConfig&, const YieldConfig&) = default;
};

struct CompareConfig {
    Polynomial ms_alpha = Polynomial::constant(0.0);
    Polynomial ms_sigma = Polynomial::constant(1.0);
    std::vector<double> t_slices{0.5};
    friend bool operator==(const CompareConfig&, const CompareConfig&) = default;
};

struct RunConfig {
    Command command = Command::qv;
    GridConfig grid;
    CoefficientConfig coefficients;
    CurveConfig r0;
    std::uint64_t seed = 20261018;
    std::size_t n_seeds = 50;
    std::size_t n_paths = 1000;
    std::string output_dir = "out";
    ToleranceConfig tolerances;
    SimulateConfig simulate;
    QvConfig qv;
    WeakformConfig weakform;
    LemmasConfig lemmas;
    YieldConfig yield;
    CompareConfig compare;
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Defaults that depend on the command.
[[nodiscard]] inline RunConfig default_config(Command cmd) {
    RunConfig c;
    c.command = cmd;
    const Polynomial t{{{1.0, 1, 0}}};
    switch (cmd) {
        case Command::qv:
            c.grid.h = 1.0 / 512.0;
            break;
        case Command::simulate:
            c.grid.h = 0.01;
            c.coefficients = {t, t.negated(), Polynomial::constant(0.0)};
            break;
        case Command::weakform:
            c.grid.h = 0.01;
            c.n_seeds = 20;
            c.coefficients = {t, t.negated(), Polynomial::constant(0.0)};
            break;
        case Command::lemmas:
            c.grid.h = 1.0 / 256.0;
            break;
        case Command::yield:
        case Command::compare:
            c.grid.h = 0.05;
            c.coefficients = {Polynomial::constant(0.01), Polynomial::constant(-0.01), Polynomial::constant(0.0)};
            break;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

[[nodiscard]] inline std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Common alternative spellings of known keys.
inline const std::map<std::string, std::string>& key_aliases() {
    static const std::map<std::string, std::string> aliases{
        {"stepsize", "h"},      {"step_size", "h"},      {"step", "h"},           {"dt", "h"},
        {"dx", "h"},            {"T", "t_max"},          {"X", "x_max"},          {"paths", "n_paths"},
        {"npaths", "n_paths"},  {"num_paths", "n_paths"}, {"seeds", "n_seeds"},   {"nseeds", "n_seeds"},
        {"out", "output_dir"},  {"output", "output_dir"}, {"outdir", "output_dir"}, {"vol", "a"},
        {"sigma", "ms_sigma"},  {"alpha", "ms_alpha"},   {"carry", "c"},          {"n", "n_values"},
    };
    return aliases;
}

[[nodiscard]] inline std::string suggest_key(const std::string& key, const std::vector<std::string>& known) {
    static const std::map<std::string, std::vector<std::string>> sections{
        {"grid", {"t_max", "x_max", "h"}},
        {"coefficients", {"a", "b", "c"}},
        {"qv", {"n_values"}},
        {"compare", {"ms_alpha", "ms_sigma"}},
    };
    const auto& aliases = key_aliases();
    if (auto it = aliases.find(key); it != aliases.end()) {
        if (std::find(known.begin(), known.end(), it->second) != known.end()) return it->second;
        for (const auto& [sec, keys] : sections) {
            if (std::find(keys.begin(), keys.end(), it->second) != keys.end() &&
                std::find(known.begin(), known.end(), sec) != known.end()) {
                return sec + "." + it->second;
            }
        }
    }
    std::string best;
    std::size_t best_d = 3;
    for (const auto& k : known) {
        const std::size_t d = edit_distance(key, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return best;
}

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::config, "config field " + path + ": " + what);
}

/// Rejects keys of `obj` outside `known`, suggesting the likely intended one.
inline void check_keys(const nlohmann::json& obj, const std::string& path, const std::vector<std::string>& known) {
    if (!obj.is_object()) field_error(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) != known.end()) continue;
        std::string msg = "unknown key \"" + key + "\"";
        const std::string s = suggest_key(key, known);
        if (!s.empty()) msg += " (did you mean \"" + s + "\"?)";
        field_error(path.empty() ? key : path + "." + key, msg);
    }
}

template <typename T>
void read(const nlohmann::json& obj, const char* key, const std::string& path, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string p = path.empty() ? key : path + "." + key;
    try {
        if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
            if (!it->is_number_unsigned()) field_error(p, "expected a non-negative integer");
        } else if constexpr (std::is_same_v<T, double>) {
            if (!it->is_number()) field_error(p, "expected a number");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!it->is_boolean()) field_error(p, "expected true or false");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!it->is_string()) field_error(p, "expected a string");
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
            if (!it->is_array()) field_error(p, "expected a list of non-negative integers");
            for (const auto& e : *it) {
                if (!e.is_number_unsigned()) field_error(p, "expected a list of non-negative integers");
            }
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!it->is_array()) field_error(p, "expected a list of numbers");
            for (const auto& e : *it) {
                if (!e.is_number()) field_error(p, "expected a list of numbers");
            }
        }
        out = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
        field_error(p, std::string("invalid value (") + e.what() + ")");
    }
}

/// Coefficient language: a number, one of "t", "x", "t+x" (optionally
/// negated), or {"poly": [[coef, power_t, power_x], ...]}.
[[nodiscard]] inline Polynomial parse_coefficient(const nlohmann::json& v, const std::string& path) {
    if (v.is_number()) return Polynomial::constant(v.get<double>());
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
        double sign = 1.0;
        if (!s.empty() && s[0] == '-') {
            sign = -1.0;
            s.erase(0, 1);
        }
        if (s == "t") return Polynomial{{{sign, 1, 0}}};
        if (s == "x") return Polynomial{{{sign, 0, 1}}};
        if (s == "t+x" || s == "x+t") return Polynomial{{{sign, 1, 0}, {sign, 0, 1}}};
        field_error(path, "unknown built-in coefficient \"" + v.get<std::string>() +
                              "\" (expected a number, t, x, t+x, their negatives, or {\"poly\": ...})");
    }
    if (v.is_object()) {
        check_keys(v, path, {"poly"});
        const auto it = v.find("poly");
        if (it == v.end() || !it->is_array()) field_error(path + ".poly", "expected a list of [coef, p, q]");
        Polynomial p;
        for (std::size_t k = 0; k < it->size(); ++k) {
            const auto& term = (*it)[k];
            const std::string tp = path + ".poly[" + std::to_string(k) + "]";
            if (!term.is_array() || term.size() != 3 || !term[0].is_number() || !term[1].is_number_unsigned() ||
                !term[2].is_number_unsigned()) {
                field_error(tp, "expected [coef, power_t, power_x] with non-negative integer powers");
            }
            p.terms.push_back({term[0].get<double>(), term[1].get<int>(), term[2].get<int>()});
        }
        return p;
    }
    field_error(path, "expected a number, a built-in name or {\"poly\": ...}");
}

[[nodiscard]] inline nlohmann::json coefficient_json(const Polynomial& p) {
    if (p.terms.empty()) return {{"poly", nlohmann::json::array()}};
    if (p.terms.size() == 1 && p.terms[0].pt == 0 && p.terms[0].px == 0) return p.terms[0].coef;
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : p.terms) terms.push_back({t.coef, t.pt, t.px});
    return {{"poly", terms}};
}

inline void read_coefficient(const nlohmann::json& obj, const char* key, const std::string& path, Polynomial& out) {
    if (auto it = obj.find(key); it != obj.end()) out = parse_coefficient(*it, path + "." + key);
}

/// 1-based line and column of a byte offset.
[[nodiscard]] inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k < std::min(offset, text.size()); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

/// Command-line overrides, applied after the document.
struct ConfigOverrides {
    std::optional<Command> command;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::size_t> n_paths;
    std::optional<double> h;
};

/// Checks every value that a run relies on; throws ErrorKind::config.
inline void validate_config(const RunConfig& c) {
    using detail::field_error;
    GridSpec grid;
    try {
        grid = make_grid(c.grid.t_max, c.grid.x_max, c.grid.h);
    } catch (const Error& e) {
        field_error("grid", e.what());
    }
    auto positive = [](double v, const char* p) {
        if (!(v > 0.0)) field_error(p, "must be positive");
    };
    positive(c.tolerances.qv_relative, "tolerances.qv_relative");
    positive(c.tolerances.standard_errors, "tolerances.standard_errors");
    positive(c.tolerances.deterministic, "tolerances.deterministic");
    if (c.n_seeds < 1) field_error("n_seeds", "must be at least 1");
    if (c.n_paths < 1) field_error("n_paths", "must be at least 1");
    if (c.output_dir.empty()) field_error("output_dir", "must not be empty");

    const std::set<std::string> kinds{"flat", "nelson_siegel", "poly"};
    if (!kinds.contains(c.r0.kind)) field_error("r0.kind", "expected flat, nelson_siegel or poly");
    if (c.r0.kind == "nelson_siegel") positive(c.r0.tau, "r0.tau");
    for (const auto& [coef, p] : c.r0.poly) {
        if (p < 0) field_error("r0.poly", "powers must be non-negative");
    }
    for (const auto* poly : {&c.coefficients.a, &c.coefficients.b, &c.coefficients.c, &c.compare.ms_alpha,
                             &c.compare.ms_sigma}) {
        for (const auto& term : poly->terms) {
            if (term.pt < 0 || term.px < 0) field_error("coefficients", "powers must be non-negative");
        }
    }

    auto lattice = [&](double v, double max, const char* p) {
        try {
            (void)lattice_index(v, grid.h, static_cast<std::size_t>(std::llround(max / grid.h)), p);
        } catch (const Error& e) {
            field_error(p, e.what());
        }
    };
    auto divides = [&](const std::vector<std::size_t>& ns, std::size_t span, const char* p) {
        if (ns.empty()) field_error(p, "must not be empty");
        for (std::size_t n : ns) {
            if (n == 0 || span % n != 0) {
                field_error(p, "value " + std::to_string(n) + " does not divide the " + std::to_string(span) +
                                   " lattice cells of the range");
            }
        }
    };

    switch (c.command) {
        case Command::simulate: {
            if (c.simulate.formula != "closed_form" && c.simulate.formula != "ito") {
                field_error("simulate.formula", "expected closed_form or ito");
            }
            if (c.simulate.path != "characteristic" && c.simulate.path != "fixed_maturity") {
                field_error("simulate.path", "expected characteristic or fixed_maturity");
            }
            break;
        }
        case Command::qv: {
            lattice(c.qv.t, c.grid.t_max, "qv.t");
            lattice(c.qv.x_lo, c.grid.x_max, "qv.x_lo");
            lattice(c.qv.x_hi, c.grid.x_max, "qv.x_hi");
            if (!(c.qv.x_hi > c.qv.x_lo)) field_error("qv.x_hi", "must exceed qv.x_lo");
            const auto span = static_cast<std::size_t>(std::llround((c.qv.x_hi - c.qv.x_lo) / grid.h));
            divides(c.qv.n_values, span, "qv.n_values");
            if (!c.qv.holder_levels.empty()) {
                if (c.qv.holder_levels.size() < 3) field_error("qv.holder_levels", "needs at least 3 levels");
                divides(c.qv.holder_levels, span, "qv.holder_levels");
            }
            break;
        }
        case Command::weakform: {
            if (c.weakform.h_values.empty()) field_error("weakform.h_values", "must not be empty");
            const double fine = *std::min_element(c.weakform.h_values.begin(), c.weakform.h_values.end());
            try {
                (void)make_grid(c.grid.t_max, c.grid.x_max, fine);
                for (double h : c.weakform.h_values) (void)make_grid(c.grid.t_max, c.grid.x_max, h);
            } catch (const Error& e) {
                field_error("weakform.h_values", e.what());
            }
            break;
        }
        case Command::lemmas: {
            if (c.lemmas.quadlem_seeds < 2) field_error("lemmas.quadlem_seeds", "must be at least 2");
            if (c.lemmas.sup_seeds < 1) field_error("lemmas.sup_seeds", "must be at least 1");
            if (!(c.lemmas.kappa > 0.0 && c.lemmas.kappa < 1.0)) field_error("lemmas.kappa", "must lie in (0, 1)");
            lattice(c.lemmas.disjoint_r, c.grid.t_max, "lemmas.disjoint_r");
            lattice(c.lemmas.disjoint_s, c.grid.t_max, "lemmas.disjoint_s");
            if (c.lemmas.disjoint_s + 1.0 > grid.sheet_x_max + 1e-12) {
                field_error("lemmas.disjoint_s", "the set [0,s] x [s, s+1] leaves the sheet");
            }
            const auto cells = static_cast<std::size_t>(std::llround(1.0 / grid.h));
            if (std::abs(static_cast<double>(cells) * grid.h - 1.0) > 1e-9 || c.grid.t_max < 1.0 - 1e-12) {
                field_error("grid", "lemma checks use unit-length sets; h must divide 1 and t_max >= 1");
            }
            divides(c.lemmas.quadlem_n, cells, "lemmas.quadlem_n");
            divides(c.lemmas.sup_n, cells, "lemmas.sup_n");
            break;
        }
        case Command::yield:
        case Command::compare: {
            const CoefficientSet cs = make_coefficients(c.coefficients.a, c.coefficients.b, c.coefficients.c);
            const ExistenceReport ex = existence_check(cs, grid, c.tolerances.deterministic);
            if (!ex.exists) {
                std::ostringstream msg;
                msg << "coefficients.b must equal -a for the forward-curve equation: a function-valued solution "
                       "exists only when a(t,x) = -b(t,x) (max |a+b| = "
                    << ex.max_deviation << " at t=" << ex.t_at << ", x=" << ex.x_at << ")";
                field_error("coefficients.b", msg.str());
            }
            const auto& slices = c.command == Command::yield ? c.yield.t_slices : c.compare.t_slices;
            const char* p = c.command == Command::yield ? "yield.t_slices" : "compare.t_slices";
            if (slices.empty()) field_error(p, "must not be empty");
            for (double t : slices) {
                lattice(t, c.grid.t_max, p);
                if (c.command == Command::compare && !(t < c.grid.t_max - 0.5 * grid.h)) {
                    field_error(p, "increment slices must lie strictly before t_max");
                }
            }
            break;
        }
    }
}

/// Parses a JSON document into a validated RunConfig. Syntax errors report
/// line and column, field errors the dotted field path.
[[nodiscard]] inline RunConfig parse_config(const std::string& text, const ConfigOverrides& ov = {}) {
    using detail::read;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [line, col] = detail::line_col(text, e.byte == 0 ? 0 : e.byte - 1);
        throw Error(ErrorKind::config, "config syntax error at line " + std::to_string(line) + ", column " +
                                           std::to_string(col) + ": " + e.what());
    }
    if (!doc.is_object()) detail::field_error("(root)", "expected an object");
    detail::check_keys(doc, "",
                       {"command", "grid", "coefficients", "r0", "seed", "n_seeds", "n_paths", "output_dir",
                        "tolerances", "simulate", "qv", "weakform", "lemmas", "yield", "compare"});

    std::optional<Command> cmd = ov.command;
    if (!cmd) {
        std::string name;
        read(doc, "command", "", name);
        if (name.empty()) detail::field_error("command", "missing (simulate, qv, weakform, lemmas, yield or compare)");
        cmd = parse_command(name);
        if (!cmd) detail::field_error("command", "unknown command \"" + name + "\"");
    } else if (doc.contains("command")) {
        std::string name;
        read(doc, "command", "", name);
        if (!parse_command(name)) detail::field_error("command", "unknown command \"" + name + "\"");
    }
    RunConfig c = default_config(*cmd);

    auto section = [&](const char* key, const std::vector<std::string>& known) -> const nlohmann::json* {
        auto it = doc.find(key);
        if (it == doc.end()) return nullptr;
        detail::check_keys(*it, key, known);
        return &*it;
    };

    if (const auto* s = section("grid", {"t_max", "x_max", "h"})) {
        read(*s, "t_max", "grid", c.grid.t_max);
        read(*s, "x_max", "grid", c.grid.x_max);
        read(*s, "h", "grid", c.grid.h);
    }
    bool b_given = false;
    if (const auto* s = section("coefficients", {"a", "b", "c"})) {
        detail::read_coefficient(*s, "a", "coefficients", c.coefficients.a);
        detail::read_coefficient(*s, "b", "coefficients", c.coefficients.b);
        detail::read_coefficient(*s, "c", "coefficients", c.coefficients.c);
        b_given = s->contains("b");
        if (s->contains("a") && !b_given && (c.command == Command::yield || c.command == Command::compare)) {
            c.coefficients.b = c.coefficients.a.negated();
        }
    }
    if (const auto* s = section("r0", {"kind", "level", "beta0", "beta1", "beta2", "tau", "poly"})) {
        read(*s, "kind", "r0", c.r0.kind);
        read(*s, "level", "r0", c.r0.level);
        read(*s, "beta0", "r0", c.r0.beta0);
        read(*s, "beta1", "r0", c.r0.beta1);
        read(*s, "beta2", "r0", c.r0.beta2);
        read(*s, "tau", "r0", c.r0.tau);
        if (auto it = s->find("poly"); it != s->end()) {
            if (!it->is_array()) detail::field_error("r0.poly", "expected a list of [coef, power]");
            c.r0.poly.clear();
            for (const auto& term : *it) {
                if (!term.is_array() || term.size() != 2 || !term[0].is_number() || !term[1].is_number_unsigned()) {
                    detail::field_error("r0.poly", "expected [coef, power] with a non-negative integer power");
                }
                c.r0.poly.emplace_back(term[0].get<double>(), term[1].get<int>());
            }
        }
    }
    read(doc, "seed", "", c.seed);
    read(doc, "n_seeds", "", c.n_seeds);
    read(doc, "n_paths", "", c.n_paths);
    read(doc, "output_dir", "", c.output_dir);
    if (const auto* s = section("tolerances", {"qv_relative", "standard_errors", "deterministic"})) {
        read(*s, "qv_relative", "tolerances", c.tolerances.qv_relative);
        read(*s, "standard_errors", "tolerances", c.tolerances.standard_errors);
        read(*s, "deterministic", "tolerances", c.tolerances.deterministic);
    }
    if (const auto* s = section("simulate", {"formula", "path"})) {
        read(*s, "formula", "simulate", c.simulate.formula);
        read(*s, "path", "simulate", c.simulate.path);
    }
    if (const auto* s = section("qv", {"t", "x_lo", "x_hi", "n_values", "holder_levels"})) {
        read(*s, "t", "qv", c.qv.t);
        read(*s, "x_lo", "qv", c.qv.x_lo);
        read(*s, "x_hi", "qv", c.qv.x_hi);
        read(*s, "n_values", "qv", c.qv.n_values);
        read(*s, "holder_levels", "qv", c.qv.holder_levels);
    }
    if (const auto* s = section("weakform", {"h_values"})) read(*s, "h_values", "weakform", c.weakform.h_values);
    if (const auto* s = section("lemmas", {"quadlem_seeds", "quadlem_n", "disjoint_r", "disjoint_s", "sup_seeds",
                                           "sup_n", "kappa"})) {
        read(*s, "quadlem_seeds", "lemmas", c.lemmas.quadlem_seeds);
        read(*s, "quadlem_n", "lemmas", c.lemmas.quadlem_n);
        read(*s, "disjoint_r", "lemmas", c.lemmas.disjoint_r);
        read(*s, "disjoint_s", "lemmas", c.lemmas.disjoint_s);
        read(*s, "sup_seeds", "lemmas", c.lemmas.sup_seeds);
        read(*s, "sup_n", "lemmas", c.lemmas.sup_n);
        read(*s, "kappa", "lemmas", c.lemmas.kappa);
    }
    if (const auto* s = section("yield", {"t_slices", "keep_paths"})) {
        read(*s, "t_slices", "yield", c.yield.t_slices);
        read(*s, "keep_paths", "yield", c.yield.keep_paths);
    }
    if (const auto* s = section("compare", {"ms_alpha", "ms_sigma", "t_slices"})) {
        detail::read_coefficient(*s, "ms_alpha", "compare", c.compare.ms_alpha);
        detail::read_coefficient(*s, "ms_sigma", "compare", c.compare.ms_sigma);
        read(*s, "t_slices", "compare", c.compare.t_slices);
    }

    if (ov.seed) c.seed = *ov.seed;
    if (ov.output_dir) c.output_dir = *ov.output_dir;
    if (ov.n_paths) c.n_paths = *ov.n_paths;
    if (ov.h) c.grid.h = *ov.h;

    validate_config(c);
    return c;
}

/// Fully materialised document; parse_config(serialize(c).dump()) == c.
[[nodiscard]] inline nlohmann::json serialize(const RunConfig& c) {
    using detail::coefficient_json;
    nlohmann::json poly = nlohmann::json::array();
    for (const auto& [coef, p] : c.r0.poly) poly.push_back({coef, p});
    return {
        {"command", to_string(c.command)},
        {"grid", {{"t_max", c.grid.t_max}, {"x_max", c.grid.x_max}, {"h", c.grid.h}}},
        {"coefficients",
         {{"a", coefficient_json(c.coefficients.a)},
          {"b", coefficient_json(c.coefficients.b)},
          {"c", coefficient_json(c.coefficients.c)}}},
        {"r0",
         {{"kind", c.r0.kind},
          {"level", c.r0.level},
          {"beta0", c.r0.beta0},
          {"beta1", c.r0.beta1},
          {"beta2", c.r0.beta2},
          {"tau", c.r0.tau},
          {"poly", poly}}},
        {"seed", c.seed},
        {"n_seeds", c.n_seeds},
        {"n_paths", c.n_paths},
        {"output_dir", c.output_dir},
        {"tolerances",
         {{"qv_relative", c.tolerances.qv_relative},
          {"standard_errors", c.tolerances.standard_errors},
          {"deterministic", c.tolerances.deterministic}}},
        {"simulate", {{"formula", c.simulate.formula}, {"path", c.simulate.path}}},
        {"qv",
         {{"t", c.qv.t},
          {"x_lo", c.qv.x_lo},
          {"x_hi", c.qv.x_hi},
          {"n_values", c.qv.n_values},
          {"holder_levels", c.qv.holder_levels}}},
        {"weakform", {{"h_values", c.weakform.h_values}}},
        {"lemmas",
         {{"quadlem_seeds", c.lemmas.quadlem_seeds},
          {"quadlem_n", c.lemmas.quadlem_n},
          {"disjoint_r", c.lemmas.disjoint_r},
          {"disjoint_s", c.lemmas.disjoint_s},
          {"sup_seeds", c.lemmas.sup_seeds},
          {"sup_n", c.lemmas.sup_n},
          {"kappa", c.lemmas.kappa}}},
        {"yield", {{"t_slices", c.yield.t_slices}, {"keep_paths", c.yield.keep_paths}}},
        {"compare",
         {{"ms_alpha", coefficient_json(c.compare.ms_alpha)},
          {"ms_sigma", coefficient_json(c.compare.ms_sigma)},
          {"t_slices", c.compare.t_slices}}},
    };
}

// ---------------------------------------------------------------------------
// Config -> model objects

[[nodiscard]] inline GridSpec grid_of(const RunConfig& c) { return make_grid(c.grid.t_max, c.grid.x_max, c.grid.h); }

[[nodiscard]] inline CoefficientSet coefficients_of(const RunConfig& c) {
    return make_coefficients(c.coefficients.a, c.coefficients.b, c.coefficients.c);
}

/// Initial curve on [0, t_max + x_max].
[[nodiscard]] inline InitialCurve curve_of(const RunConfig& c) {
    const double dom = c.grid.t_max + c.grid.x_max;
    if (c.r0.kind == "flat") return flat_curve(c.r0.level, dom);
    if (c.r0.kind == "poly") {
        Polynomial p;
        for (const auto& [coef, pw] : c.r0.poly) p.terms.push_back({coef, 0, pw});
        const Polynomial dp = p.derivative(Axis::x);
        return {[p](double x) { return p(0.0, x); }, LineFunction([dp](double x) { return dp(0.0, x); }), dom};
    }
    return nelson_siegel_curve(c.r0.beta0, c.r0.beta1, c.r0.beta2, c.r0.tau, dom);
}

}  // namespace spde
