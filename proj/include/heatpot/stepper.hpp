#pragma once

#include <functional>
#include <optional>

#include "heatpot/multistep.hpp"
#include "heatpot/problems.hpp"
#include "heatpot/spatial_adapt.hpp"

namespace heatpot {

struct StepperOptions {
    double dt = 1e-3;
    double eps = 1e-9;
    int K = 8;
    int max_level = 12;
    int min_level = 0; // forced uniform depth for the initial build
    double eps_nonlinear = 0.0; // 0 = min(1e-12, eps/10)
    int max_nonlinear_iter = 50;
    int helmholtz_grid_cap = 1024;
    bool adapt_l2_metric = true; // resolve test used when building fields
};

/// March state: current solution, stored forcing history (newest first),
/// step counter and time.
struct SolverState {
    TreeField u;
    HistoryBuffer history;
    int step = 0;
    double t = 0.0;
};

/// Convolve each component of u with the periodic heat kernel over one step:
/// component i uses delta = 4 D_i dt (zero-diffusion components pass through).
TreeField initial_potential(const TreeField& u, std::span<const double> D, double dt, double eps,
                            int max_level = 12);

/// The transforms U_{n+1}(u_{n+1-i}, t_{n+1-i}) for i = 1..count: stored
/// forcing i steps back convolved with the kernel of elapsed time i dt.
std::vector<TreeField> history_transforms(const SolverState& state, int count,
                                          std::span<const double> D, double dt, double eps,
                                          int max_level = 12);

/// g = I[u_n] + dt sum_{i>=1} b_i U_{n+1}(...), on a union tree.
/// Throws SolveError when the history is shorter than the scheme needs.
TreeField history_term(const SolverState& state, const MultistepScheme& scheme,
                       std::span<const double> D, double dt, double eps, int max_level = 12);

struct PointSolveResult {
    double value = 0.0;
    int iters = 0;
};

/// Secant solve of u - dt b0 F(u, x, t) = g with the standard two guesses
/// u0 = u_prev, u1 = g + dt b0 F(u_prev, x, t_prev).
PointSolveResult solve_pointwise_scalar(double g, const Problem& problem, double dt, double b0,
                                        double t_next, double x, double y, double u_prev,
                                        double t_prev, double eps_nl, int max_iter,
                                        double clamp_range);

/// Newton solve of the p-component analogue with the problem's Jacobian.
int solve_pointwise_system(std::span<const double> g, const Problem& problem, double dt,
                           double b0, double t_next, double x, double y,
                           std::span<const double> u_prev, std::span<double> out, double eps_nl,
                           int max_iter, double clamp_range);

/// One accepted time step: history transforms, the scheme's combination,
/// pointwise solves where implicit, spatial adaptation, forcing storage.
StepReport advance(SolverState& state, const MultistepScheme& scheme, const Problem& problem,
                   const StepperOptions& opts);

/// advance(), but explicit/predictor-corrector schemes drop to the highest
/// order their history supports (ladder startup for s <= 2).
StepReport advance_auto(SolverState& state, const MultistepScheme& scheme, const Problem& problem,
                        const StepperOptions& opts);

/// Fresh state: u0 resolved from the problem's initial data, forcing at t=0
/// stored (projected when the problem asks for it).
SolverState make_initial_state(const Problem& problem, const MultistepScheme& scheme,
                               const StepperOptions& opts);

/// Richardson startup for order-4 schemes: runs the order-2 relative of the
/// scheme over each startup interval with steps dt, dt/2, dt/4 and combines
/// (32 C - 12 B + A)/21, eliminating the h^2 and h^3 error terms; the forcing
/// history is rebuilt from the extrapolated states.
void bootstrap_richardson(SolverState& state, const MultistepScheme& scheme,
                          const Problem& problem, const StepperOptions& opts);

/// Evaluate the stored-forcing field for a solution field (projection applied
/// for Stokes/NS problems). t_proj, when given, accumulates projection time.
TreeField forcing_field(const TreeField& u, const Problem& problem, double t,
                        const StepperOptions& opts, double* t_proj = nullptr);

} // namespace heatpot
