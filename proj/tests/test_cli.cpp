// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spde/config.hpp"
#include "spde/runner.hpp"

using namespace spde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("spde_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text, const ConfigOverrides& ov = {}) {
    try {
        (void)parse_config(text, ov);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::config);
        return e.what();
    }
    ADD_FAILURE() << "no error for " << text;
    return {};
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string(SPDE_LAB_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, MinimalDocumentTakesCommandDefaults) {
    const RunConfig c = parse_config(R"({"command": "qv"})");
    EXPECT_EQ(c.command, Command::qv);
    EXPECT_DOUBLE_EQ(c.grid.h, 1.0 / 512);
    EXPECT_EQ(c.qv.n_values, (std::vector<std::size_t>{16, 32, 64, 128, 256}));
    EXPECT_EQ(c, default_config(Command::qv));
}

TEST(Config, OverridesWinOverDocument) {
    ConfigOverrides ov;
    ov.command = Command::simulate;
    ov.seed = 9;
    ov.h = 0.05;
    ov.output_dir = "elsewhere";
    const RunConfig c = parse_config(R"({"command": "qv", "seed": 1, "grid": {"h": 0.1}})", ov);
    EXPECT_EQ(c.command, Command::simulate);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_DOUBLE_EQ(c.grid.h, 0.05);
    EXPECT_EQ(c.output_dir, "elsewhere");
}

TEST(Config, UnknownKeySuggestsIntendedField) {
    const std::string in_grid = config_error(R"({"command": "qv", "grid": {"stepsize": 0.01}})");
    EXPECT_NE(in_grid.find("grid.stepsize"), std::string::npos) << in_grid;
    EXPECT_NE(in_grid.find("did you mean \"h\""), std::string::npos) << in_grid;
    const std::string at_root = config_error(R"({"command": "qv", "stepsize": 0.01})");
    EXPECT_NE(at_root.find("did you mean \"grid.h\""), std::string::npos) << at_root;
    const std::string typo = config_error(R"({"command": "qv", "n_seed": 3})");
    EXPECT_NE(typo.find("did you mean \"n_seeds\""), std::string::npos) << typo;
}

TEST(Config, YieldRejectsCoefficientsWithoutSolution) {
    const std::string msg = config_error(R"({"command": "yield", "coefficients": {"a": 0.01, "b": 0.01}})");
    EXPECT_NE(msg.find("coefficients.b"), std::string::npos) << msg;
    EXPECT_NE(msg.find("exists only when a(t,x) = -b(t,x)"), std::string::npos) << msg;
    // b defaults to -a when only a is given
    const RunConfig ok = parse_config(R"({"command": "yield", "coefficients": {"a": "t"}})");
    EXPECT_EQ(ok.coefficients.b, (Polynomial{{{-1.0, 1, 0}}}));
}

TEST(Config, SyntaxErrorReportsLineAndColumn) {
    const std::string msg = config_error("{\n  \"command\": \"qv\",\n  \"seed\": ,\n}");
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(Config, TypeAndRangeErrorsNameTheField) {
    EXPECT_NE(config_error(R"({"command": "qv", "seed": -1})").find("config field seed"), std::string::npos);
    EXPECT_NE(config_error(R"({"command": "qv", "qv": {"n_values": [7]}})").find("qv.n_values"), std::string::npos);
    EXPECT_NE(config_error(R"({"command": "qv", "grid": {"h": 0.3}})").find("grid"), std::string::npos);
    EXPECT_NE(config_error(R"({"command": "nope"})").find("unknown command"), std::string::npos);
    EXPECT_NE(config_error(R"({})").find("command"), std::string::npos);
    EXPECT_NE(config_error(R"({"command": "simulate", "simulate": {"formula": "x"}})").find("simulate.formula"),
              std::string::npos);
}

TEST(Config, CoefficientSpellings) {
    const RunConfig c = parse_config(
        R"({"command": "simulate", "coefficients": {"a": "t+x", "b": {"poly": [[-1, 1, 0], [-1, 0, 1]]}, "c": 2}})");
    EXPECT_DOUBLE_EQ(c.coefficients.a(0.3, 0.4), 0.7);
    EXPECT_DOUBLE_EQ(c.coefficients.b(0.3, 0.4), -0.7);
    EXPECT_DOUBLE_EQ(c.coefficients.c(0.3, 0.4), 2.0);
}

TEST(Config, SerializeRoundTripsEveryCommand) {
    for (Command cmd : {Command::simulate, Command::qv, Command::weakform, Command::lemmas, Command::yield,
                        Command::compare}) {
        RunConfig c = default_config(cmd);
        c.seed = 77;
        c.r0.kind = "poly";
        c.r0.poly = {{0.01, 0}, {0.002, 1}};
        EXPECT_EQ(parse_config(serialize(c).dump()), c) << to_string(cmd);
        EXPECT_EQ(parse_config(serialize(c).dump(2)), c) << to_string(cmd);
    }
}

TEST(Run, ZeroVolSimulationEqualsTransport) {
    const fs::path dir = scratch("zero_vol");
    ConfigOverrides ov;
    ov.output_dir = dir.string();
    const RunConfig c =
        parse_config(R"({"command": "simulate", "grid": {"h": 0.05}, "coefficients": {"a": 0, "b": 0}})", ov);
    const RunResult r = run(c);
    ASSERT_EQ(r.exit_code, 0) << r.error;
    EXPECT_EQ(slurp(dir / "solution.csv"), slurp(dir / "transport.csv"));
    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["seed"], c.seed);
    EXPECT_EQ(manifest["inputs"], serialize(c));
    EXPECT_TRUE(manifest["timing"].contains("wall_seconds"));
    EXPECT_FALSE(fs::exists(dir / "error.json"));
}

TEST(Run, ExistenceFailureLeavesOnlyErrorRecord) {
    const fs::path dir = scratch("no_solution");
    RunConfig c = default_config(Command::simulate);
    c.output_dir = dir.string();
    c.grid.h = 0.1;
    c.coefficients = {Polynomial::constant(1), Polynomial::constant(1), Polynomial::constant(0)};
    const RunResult r = run(c);
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_TRUE(r.files.empty());
    const auto err = nlohmann::json::parse(slurp(dir / "error.json"));
    EXPECT_EQ(err["status"], "error");
    EXPECT_EQ(err["kind"], "existence");
    EXPECT_EQ(err["exit_code"], 3);
    EXPECT_FALSE(fs::exists(dir / "solution.csv"));
    EXPECT_FALSE(fs::exists(dir / "manifest.json"));
}

TEST(Run, SameConfigSameBytes) {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    RunConfig c = default_config(Command::yield);
    c.n_paths = 20;
    c.output_dir = a.string();
    ASSERT_EQ(run(c).exit_code, 0);
    c.output_dir = b.string();
    ASSERT_EQ(run(c).exit_code, 0);
    EXPECT_EQ(slurp(a / "yield_slices.csv"), slurp(b / "yield_slices.csv"));
    EXPECT_EQ(slurp(a / "yield_report.json"), slurp(b / "yield_report.json"));
    auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
    auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
    // only timing and the output directory may differ
    for (auto* m : {&ma, &mb}) {
        m->erase("timing");
        (*m)["inputs"].erase("output_dir");
        auto& outs = (*m)["outputs"];
        ASSERT_EQ(outs.back()["name"], "effective_config.json");
        outs.erase(outs.size() - 1);
    }
    EXPECT_EQ(ma, mb);
}

TEST(Tool, ExitCodes) {
    const fs::path dir = scratch("tool");
    fs::create_directories(dir);
    const std::string out = " --out " + dir.string();
    {
        std::ofstream(dir / "ok.json") << R"({"grid": {"h": 0.1}, "coefficients": {"a": 0, "b": 0}})";
        std::ofstream(dir / "bad.json") << R"({"grid": {"stepsize": 0.1}})";
        std::ofstream(dir / "nosol.json") << R"({"grid": {"h": 0.1}, "coefficients": {"a": 1, "b": 1}})";
    }
    EXPECT_EQ(run_tool("simulate --config " + (dir / "ok.json").string() + out), 0);
    EXPECT_TRUE(fs::exists(dir / "solution.csv"));
    EXPECT_EQ(run_tool("simulate --config " + (dir / "bad.json").string() + out), 2);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "error.json"))["kind"], "config");
    EXPECT_EQ(run_tool("simulate --config " + (dir / "nosol.json").string() + out), 3);
    EXPECT_EQ(run_tool("simulate --config " + (dir / "missing.json").string() + out), 4);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "error.json"))["kind"], "io");
    EXPECT_EQ(run_tool("bogus" + out), 2);
    EXPECT_EQ(run_tool("simulate --h 0.05 --seed 3 --config " + (dir / "ok.json").string() + out), 0);
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m["seed"], 3);
    EXPECT_EQ(m["inputs"]["grid"]["h"], 0.05);
}
