#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "heatpot/driver.hpp"
#include "heatpot/errors.hpp"

namespace {

heatpot::RunConfig load_config(const std::string& path) {
    auto cfg = heatpot::RunConfig::load_file(path);
    if (const char* dir = std::getenv("HEATPOT_OUTPUT_DIR")) cfg.output_dir = dir;
    if (const char* w = std::getenv("HEATPOT_WORKERS")) cfg.workers = std::max(1, std::atoi(w));
    return cfg;
}

std::vector<int> parse_steps(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"space-time adaptive periodic parabolic solver"};
    app.require_subcommand(1);

    std::string config_path, steps_csv, out_dir, snapshot_path, csv_path;
    int resolution = 256;
    int workers = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("-c,--config", config_path, "run configuration file")->required();
        cmd->add_option("-o,--out", out_dir, "override the output directory");
        cmd->add_option("-w,--workers", workers, "worker thread count");
    };

    auto* run = app.add_subcommand("run", "execute a simulation and write artifacts");
    add_common(run);
    auto* conv = app.add_subcommand("converge", "run a time-convergence study");
    add_common(conv);
    conv->add_option("-n,--steps", steps_csv, "comma-separated step counts (>= 3)")->required();
    auto* prof = app.add_subcommand("profile", "per-step phase timing table");
    add_common(prof);
    auto* insp = app.add_subcommand("inspect", "dump a snapshot file as CSV");
    insp->add_option("snapshot", snapshot_path, "snapshot (.hpt) file")->required();
    insp->add_option("-O,--output", csv_path, "output CSV path")->required();
    insp->add_option("-r,--resolution", resolution, "uniform resample resolution");

    CLI11_PARSE(app, argc, argv);

    try {
        if (insp->parsed()) {
            heatpot::inspect_snapshot(snapshot_path, csv_path, resolution);
            return 0;
        }
        auto cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (workers > 0) cfg.workers = workers;

        if (run->parsed()) {
            auto summary = heatpot::run_simulation(cfg, &std::cerr);
            std::cout << "steps=" << summary.steps << " t=" << summary.t_final
                      << " leaves=" << summary.final_leaf_count;
            if (summary.l2_error_vs_exact >= 0.0)
                std::cout << " l2_error=" << summary.l2_error_vs_exact;
            std::cout << "\n";
        } else if (conv->parsed()) {
            auto table = heatpot::run_convergence(cfg, parse_steps(steps_csv), &std::cerr);
            std::cout << table.text();
        } else if (prof->parsed()) {
            auto table = heatpot::run_profile(cfg, &std::cerr);
            std::cout << table.text();
        }
    } catch (const heatpot::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const heatpot::Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
