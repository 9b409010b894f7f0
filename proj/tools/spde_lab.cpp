// SPDX-License-Identifier: Apache-2.0
// Batch front end: spde_lab <command> [--config file] [--seed n] [--out dir] [--paths n] [--h step]

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spde/spde.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Brownian-sheet SPDE laboratory"};
    app.set_help_flag("--help", "print this help and exit");
    std::string command, config_path, out_dir;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    double h = 0.0;
    app.add_option("command", command, "simulate | qv | weakform | lemmas | yield | compare");
    app.add_option("--config", config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed, "base seed");
    auto* out_opt = app.add_option("--out", out_dir, "output directory");
    auto* paths_opt = app.add_option("--paths", paths, "number of paths");
    auto* h_opt = app.add_option("--h", h, "lattice step");
    CLI11_PARSE(app, argc, argv);

    spde::ConfigOverrides ov;
    if (!command.empty()) {
        ov.command = spde::parse_command(command);
        if (!ov.command) {
            std::cerr << "unknown command \"" << command << "\"\n";
            return 2;
        }
    }
    if (*seed_opt) ov.seed = seed;
    if (*out_opt) ov.output_dir = out_dir;
    if (*paths_opt) ov.n_paths = paths;
    if (*h_opt) ov.h = h;

    std::string text = "{}";
    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            const std::string msg = "cannot read config " + config_path;
            std::cerr << msg << "\n";
            return spde::write_error_record(ov.output_dir.value_or(spde::RunConfig{}.output_dir), spde::ErrorKind::io,
                                            msg);
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }

    spde::RunConfig cfg;
    try {
        cfg = spde::parse_config(text, ov);
    } catch (const spde::Error& e) {
        std::cerr << e.what() << "\n";
        return spde::write_error_record(ov.output_dir.value_or(spde::RunConfig{}.output_dir), e.kind(), e.what());
    }
    const spde::RunResult res = spde::run(cfg);
    if (res.exit_code != 0) {
        std::cerr << res.error << "\n";
        return res.exit_code;
    }
    for (const auto& f : res.files) std::cout << (std::filesystem::path(cfg.output_dir) / f).string() << "\n";
    return 0;
}
