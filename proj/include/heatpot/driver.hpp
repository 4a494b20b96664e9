#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "heatpot/config.hpp"

namespace heatpot {

struct RunSummary {
    int steps = 0;
    double t_final = 0.0;
    int final_leaf_count = 0;
    std::size_t final_point_count = 0;
    double l2_error_vs_exact = -1.0; // -1 when the problem has no exact solution
    std::vector<int> leaf_trajectory;
    std::vector<StepReport> reports;
};

/// Execute the configured simulation: bootstrap, advance loop, snapshot and
/// step-report artifacts under config.output_dir, summary.json at the end.
RunSummary run_simulation(const RunConfig& config, std::ostream* log = nullptr);

struct ConvergenceRow {
    int n_steps = 0;
    double error = 0.0;
    double order = 0.0; // estimated from the next row; 0 on the last
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    bool against_exact = false;
    std::string text() const;
};

/// Run the problem at each step count, measure discrete l2 errors on a fixed
/// uniform sampling against the exact solution (when available) or the
/// finest run, and estimate per-row convergence orders.
ConvergenceTable run_convergence(const RunConfig& config, const std::vector<int>& step_counts,
                                 std::ostream* log = nullptr);

/// Per-step phase timing table in the throughput layout.
struct ProfileTable {
    std::vector<StepReport> reports;
    std::string text() const;
};
ProfileTable run_profile(const RunConfig& config, std::ostream* log = nullptr);

/// Dump a snapshot file as CSV: x, y, components (plus vorticity for
/// 2-component fields) on a uniform grid.
void inspect_snapshot(const std::string& snapshot_path, const std::string& csv_path,
                      int resolution);

/// Uniform-resample CSV for one field (the per-snapshot export of run()).
void write_field_csv(const TreeField& field, const std::string& path, int resolution,
                     bool with_vorticity);

} // namespace heatpot
