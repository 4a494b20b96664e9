#include "heatpot/driver.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "heatpot/errors.hpp"
#include "heatpot/parallel.hpp"
#include "heatpot/problems.hpp"

namespace heatpot {

namespace fs = std::filesystem;

namespace {

double l2_error_fields(const TreeField& a, const TreeField& b, int M) {
    double acc = 0.0;
    std::vector<double> va(a.ncomp()), vb(b.ncomp());
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) {
            double x = -0.5 + (i + 0.5) / static_cast<double>(M);
            double y = -0.5 + (j + 0.5) / static_cast<double>(M);
            a.eval(x, y, va);
            b.eval(x, y, vb);
            for (int c = 0; c < a.ncomp(); ++c) acc += (va[c] - vb[c]) * (va[c] - vb[c]);
        }
    return std::sqrt(acc / (M * M));
}

double l2_error_exact(const TreeField& u, const Problem& prob, double t, int M) {
    double acc = 0.0;
    std::vector<double> uv(prob.ncomp()), ue(prob.ncomp());
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) {
            double x = -0.5 + (i + 0.5) / static_cast<double>(M);
            double y = -0.5 + (j + 0.5) / static_cast<double>(M);
            u.eval(x, y, uv);
            prob.exact(x, y, t, ue);
            for (int c = 0; c < prob.ncomp(); ++c) acc += (uv[c] - ue[c]) * (uv[c] - ue[c]);
        }
    return std::sqrt(acc / (M * M));
}

SolverState start_state(const RunConfig& config, const Problem& problem,
                        const MultistepScheme& scheme, const StepperOptions& opts) {
    auto state = make_initial_state(problem, scheme, opts);
    if (scheme.order > 2) bootstrap_richardson(state, scheme, problem, opts);
    return state;
}

TreeField integrate_to(const RunConfig& config, int n_steps, RunSummary* summary,
                       std::ostream* log, std::ostream* report_csv) {
    auto problem = config.build_problem();
    auto scheme = config.make_scheme();
    auto opts = config.stepper_options();
    opts.dt = config.t_final / n_steps;
    set_worker_count(config.workers);

    auto state = start_state(config, *problem, scheme, opts);
    if (summary) summary->leaf_trajectory.push_back(state.u.tree().leaf_count());
    while (state.step < n_steps) {
        auto rep = advance_auto(state, scheme, *problem, opts);
        if (summary) {
            summary->reports.push_back(rep);
            summary->leaf_trajectory.push_back(rep.n_leaf);
        }
        if (report_csv) *report_csv << rep.csv_row() << "\n";
        if (log && (state.step % 50 == 0 || state.step == n_steps))
            *log << "[heatpot] step " << state.step << "/" << n_steps << " t=" << state.t
                 << " leaves=" << rep.n_leaf << "\n";
    }
    if (summary) {
        summary->steps = state.step;
        summary->t_final = state.t;
        summary->final_leaf_count = state.u.tree().leaf_count();
        summary->final_point_count = state.u.point_count();
    }
    return std::move(state.u);
}

} // namespace

void write_field_csv(const TreeField& field, const std::string& path, int resolution,
                     bool with_vorticity) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os.precision(12);
    os << "x,y";
    for (int c = 0; c < field.ncomp(); ++c) os << ",c" << c;
    TreeField omega;
    if (with_vorticity && field.ncomp() == 2) {
        omega = vorticity(field);
        os << ",omega";
    } else {
        with_vorticity = false;
    }
    os << "\n";
    std::vector<double> v(field.ncomp());
    for (int j = 0; j < resolution; ++j)
        for (int i = 0; i < resolution; ++i) {
            double x = -0.5 + (i + 0.5) / static_cast<double>(resolution);
            double y = -0.5 + (j + 0.5) / static_cast<double>(resolution);
            field.eval(x, y, v);
            os << x << ',' << y;
            for (double c : v) os << ',' << c;
            if (with_vorticity) os << ',' << omega.eval1(x, y);
            os << "\n";
        }
}

RunSummary run_simulation(const RunConfig& config, std::ostream* log) {
    auto problem = config.build_problem();
    auto scheme = config.make_scheme();
    auto opts = config.stepper_options();
    set_worker_count(config.workers);
    int n_steps = static_cast<int>(std::llround(config.t_final / config.dt));
    if (n_steps < 1) throw ConfigError("t_final shorter than one step");
    opts.dt = config.t_final / n_steps;

    fs::create_directories(config.output_dir);
    std::ofstream reports(fs::path(config.output_dir) / "steps.csv");
    reports << StepReport::csv_header() << "\n";

    RunSummary summary;
    auto state = start_state(config, *problem, scheme, opts);
    summary.leaf_trajectory.push_back(state.u.tree().leaf_count());

    auto snapshot = [&](const TreeField& u, int step) {
        std::ostringstream name;
        name << "snapshot_" << std::setw(6) << std::setfill('0') << step;
        save_field(u, (fs::path(config.output_dir) / (name.str() + ".hpt")).string());
        write_field_csv(u, (fs::path(config.output_dir) / (name.str() + ".csv")).string(),
                        config.resample_resolution, problem->ncomp() == 2);
    };
    if (config.snapshot_every > 0) snapshot(state.u, 0);

    bool failed = false;
    std::string failure;
    try {
        while (state.step < n_steps) {
            auto rep = advance_auto(state, scheme, *problem, opts);
            summary.reports.push_back(rep);
            summary.leaf_trajectory.push_back(rep.n_leaf);
            reports << rep.csv_row() << "\n";
            if (config.snapshot_every > 0 && state.step % config.snapshot_every == 0)
                snapshot(state.u, state.step);
            if (log && (state.step % 20 == 0 || state.step == n_steps))
                *log << "[heatpot] step " << state.step << "/" << n_steps << " t=" << state.t
                     << " leaves=" << rep.n_leaf << "\n";
        }
    } catch (const Error& e) {
        failed = true;
        failure = e.what();
    }

    snapshot(state.u, state.step);
    summary.steps = state.step;
    summary.t_final = state.t;
    summary.final_leaf_count = state.u.tree().leaf_count();
    summary.final_point_count = state.u.point_count();
    if (problem->has_exact() && !failed)
        summary.l2_error_vs_exact = l2_error_exact(state.u, *problem, state.t,
                                                   std::min(config.resample_resolution, 128));

    nlohmann::json js;
    js["problem"] = config.problem;
    js["scheme"] = config.scheme;
    js["steps"] = summary.steps;
    js["t_final"] = summary.t_final;
    js["final_leaf_count"] = summary.final_leaf_count;
    js["final_point_count"] = summary.final_point_count;
    js["leaf_trajectory"] = summary.leaf_trajectory;
    if (summary.l2_error_vs_exact >= 0.0) js["l2_error_vs_exact"] = summary.l2_error_vs_exact;
    if (failed) js["failure"] = failure;
    std::ofstream(fs::path(config.output_dir) / "summary.json") << js.dump(2) << "\n";

    if (failed) throw SolveError("run failed at step " + std::to_string(state.step) + ": " + failure);
    return summary;
}

std::string ConvergenceTable::text() const {
    std::ostringstream os;
    os << "n_steps      l2_error        order   (reference: "
       << (against_exact ? "exact solution" : "finest run") << ")\n";
    for (const auto& r : rows) {
        os << std::setw(7) << r.n_steps << "  " << std::scientific << std::setprecision(4)
           << r.error;
        if (r.order != 0.0) os << "   " << std::fixed << std::setprecision(2) << r.order;
        os << "\n";
    }
    return os.str();
}

ConvergenceTable run_convergence(const RunConfig& config, const std::vector<int>& step_counts,
                                 std::ostream* log) {
    if (step_counts.size() < 3) throw ConfigError("converge: need at least 3 step counts");
    auto problem = config.build_problem();
    int M = std::min(config.resample_resolution, 128);

    std::vector<TreeField> finals;
    for (int n : step_counts) {
        if (log) *log << "[heatpot] converge: running n=" << n << "\n";
        finals.push_back(integrate_to(config, n, nullptr, log, nullptr));
    }

    ConvergenceTable table;
    table.against_exact = problem->has_exact();
    std::vector<double> errs;
    if (table.against_exact) {
        for (auto& f : finals) errs.push_back(l2_error_exact(f, *problem, config.t_final, M));
    } else {
        if (log) *log << "[heatpot] converge: running reference n=" << 2 * step_counts.back() << "\n";
        auto ref = integrate_to(config, 2 * step_counts.back(), nullptr, log, nullptr);
        for (auto& f : finals) errs.push_back(l2_error_fields(f, ref, M));
    }
    for (std::size_t k = 0; k < finals.size(); ++k) {
        ConvergenceRow row;
        row.n_steps = step_counts[k];
        row.error = errs[k];
        if (k + 1 < finals.size() && errs[k + 1] > 0.0)
            row.order = std::log(errs[k] / errs[k + 1]) /
                        std::log(static_cast<double>(step_counts[k + 1]) / step_counts[k]);
        table.rows.push_back(row);
    }
    return table;
}

std::string ProfileTable::text() const {
    std::ostringstream os;
    os << "step        n_pts     t_total   rate_tot     t_fgt  rate_fgt    t_proj rate_proj"
          "      t_nl   rate_nl   t_adapt rate_adapt\n";
    for (const auto& r : reports) {
        auto rate = [&](double t) { return t > 0 ? static_cast<double>(r.n_pts) / t : 0.0; };
        os << std::setw(4) << r.step << std::setw(13) << r.n_pts << std::scientific
           << std::setprecision(2) << std::setw(12) << r.t_total << std::setw(11)
           << rate(r.t_total) << std::setw(10) << r.t_fgt << std::setw(10) << rate(r.t_fgt)
           << std::setw(10) << r.t_proj << std::setw(10) << rate(r.t_proj) << std::setw(10)
           << r.t_nl << std::setw(10) << rate(r.t_nl) << std::setw(10) << r.t_adapt
           << std::setw(11) << rate(r.t_adapt) << "\n";
    }
    return os.str();
}

ProfileTable run_profile(const RunConfig& config, std::ostream* log) {
    RunSummary summary;
    std::ostringstream devnull;
    integrate_to(config, static_cast<int>(std::llround(config.t_final / config.dt)), &summary,
                 log, nullptr);
    return ProfileTable{summary.reports};
}

void inspect_snapshot(const std::string& snapshot_path, const std::string& csv_path,
                      int resolution) {
    auto field = load_field(snapshot_path);
    write_field_csv(field, csv_path, resolution, field.ncomp() == 2);
}

} // namespace heatpot
