#include "heatpot/stepper.hpp"

#include <atomic>
#include <chrono>
#include <cmath>

#include "heatpot/errors.hpp"
#include "heatpot/fgt.hpp"
#include "heatpot/helmholtz.hpp"
#include "heatpot/numutil.hpp"

namespace heatpot {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double nl_tolerance(const StepperOptions& opts) {
    return opts.eps_nonlinear > 0.0 ? opts.eps_nonlinear : std::min(1e-12, opts.eps / 10.0);
}

TreeField transform_components(const TreeField& f, std::span<const double> D, double tau,
                               double eps, int max_level) {
    std::vector<TreeField> comps;
    comps.reserve(f.ncomp());
    for (int c = 0; c < f.ncomp(); ++c) {
        TreeField slice = f.component(c);
        if (D[c] <= 0.0 || tau <= 0.0) {
            comps.push_back(std::move(slice));
            continue;
        }
        const auto& plan = fgt_plan(4.0 * D[c] * tau, eps, f.order());
        comps.push_back(plan.apply_adaptive(slice, eps, max_level));
    }
    if (f.ncomp() == 1) return std::move(comps[0]);
    AdaptiveTree tree = comps[0].tree();
    for (int c = 1; c < f.ncomp(); ++c) tree = union_tree(tree, comps[c].tree());
    TreeField out(tree, f.ncomp(), f.order());
    out.set_resolve_eps(eps);
    for (int c = 0; c < f.ncomp(); ++c) {
        auto r = resample_to_tree(comps[c], tree);
        for (auto id : tree.leaves()) {
            auto key = box_key(tree.node(id).box);
            auto src = r.coeffs(key, 0);
            auto dst = out.coeffs(key, c);
            std::copy(src.begin(), src.end(), dst.begin());
        }
    }
    return out;
}

} // namespace

TreeField initial_potential(const TreeField& u, std::span<const double> D, double dt, double eps,
                            int max_level) {
    auto out = transform_components(u, D, dt, eps, max_level);
    out.set_time(u.time() + dt);
    return out;
}

std::vector<TreeField> history_transforms(const SolverState& state, int count,
                                          std::span<const double> D, double dt, double eps,
                                          int max_level) {
    if (static_cast<int>(state.history.forcing.size()) < count)
        throw SolveError("history_transforms: bootstrap required (" +
                         std::to_string(state.history.forcing.size()) + " of " +
                         std::to_string(count) + " fields)");
    std::vector<TreeField> out;
    out.reserve(count);
    for (int i = 1; i <= count; ++i)
        out.push_back(transform_components(state.history.forcing[i - 1], D, i * dt, eps,
                                           max_level));
    return out;
}

namespace {

TreeField combine(const TreeField& ipot, const std::vector<TreeField>& transforms,
                  std::span<const double> b, double dt, double eps, int upto) {
    std::vector<const TreeField*> ops{&ipot};
    std::vector<double> w{1.0};
    for (int i = 1; i <= upto; ++i) {
        if (b[i] == 0.0) continue;
        ops.push_back(&transforms[i - 1]);
        w.push_back(dt * b[i]);
    }
    auto g = weighted_sum(ops, w);
    g.coarsen_resolved(eps);
    g.set_resolve_eps(eps);
    return g;
}

} // namespace

TreeField history_term(const SolverState& state, const MultistepScheme& scheme,
                       std::span<const double> D, double dt, double eps, int max_level) {
    int count = scheme.history_needed();
    auto transforms = history_transforms(state, count, D, dt, eps, max_level);
    auto ipot = initial_potential(state.u, D, dt, eps, max_level);
    auto g = combine(ipot, transforms, scheme.b, dt, eps, count);
    g.set_time(state.t + dt);
    return g;
}

PointSolveResult solve_pointwise_scalar(double g, const Problem& problem, double dt, double b0,
                                        double t_next, double x, double y, double u_prev,
                                        double t_prev, double eps_nl, int max_iter,
                                        double clamp_range) {
    if (b0 == 0.0) return {g, 0};
    std::vector<double> fu(1);
    auto residual = [&](double u) {
        problem.forcing(std::span<const double>(&u, 1), x, y, t_next, fu);
        return u - dt * b0 * fu[0] - g;
    };
    double u0 = u_prev;
    problem.forcing(std::span<const double>(&u_prev, 1), x, y, t_prev, fu);
    double u1 = g + dt * b0 * fu[0];
    double r0 = residual(u0), r1 = residual(u1);
    if (std::fabs(r1) <= eps_nl * std::max(1.0, std::fabs(u1))) return {u1, 1};
    for (int it = 2; it <= max_iter; ++it) {
        double denom = r1 - r0;
        if (denom == 0.0) break;
        double u2 = u1 - r1 * (u1 - u0) / denom;
        if (std::fabs(u2) > clamp_range)
            throw SolveError("secant solve diverged at (" + std::to_string(x) + "," +
                             std::to_string(y) + ")");
        double r2 = residual(u2);
        u0 = u1;
        r0 = r1;
        u1 = u2;
        r1 = r2;
        if (std::fabs(r1) <= eps_nl * std::max(1.0, std::fabs(u1))) return {u1, it};
    }
    throw SolveError("secant solve failed to converge at (" + std::to_string(x) + "," +
                     std::to_string(y) + ")");
}

int solve_pointwise_system(std::span<const double> g, const Problem& problem, double dt,
                           double b0, double t_next, double x, double y,
                           std::span<const double> u_prev, std::span<double> out, double eps_nl,
                           int max_iter, double clamp_range) {
    int p = static_cast<int>(g.size());
    if (b0 == 0.0) {
        for (int c = 0; c < p; ++c) out[c] = g[c];
        return 0;
    }
    std::vector<double> u(u_prev.begin(), u_prev.end());
    std::vector<double> F(p), J(p * p), res(p), du(p);
    for (int it = 1; it <= max_iter; ++it) {
        problem.forcing(u, x, y, t_next, F);
        double rnorm = 0.0, unorm = 1.0;
        for (int c = 0; c < p; ++c) {
            res[c] = u[c] - dt * b0 * F[c] - g[c];
            rnorm = std::max(rnorm, std::fabs(res[c]));
            unorm = std::max(unorm, std::fabs(u[c]));
        }
        if (rnorm <= eps_nl * unorm) {
            for (int c = 0; c < p; ++c) out[c] = u[c];
            return it;
        }
        problem.jacobian(u, x, y, t_next, J);
        for (int r = 0; r < p; ++r)
            for (int c = 0; c < p; ++c)
                J[r * p + c] = (r == c ? 1.0 : 0.0) - dt * b0 * J[r * p + c];
        if (!solve_dense(J, res, du, p))
            throw SolveError("newton: singular Jacobian at (" + std::to_string(x) + "," +
                             std::to_string(y) + ")");
        for (int c = 0; c < p; ++c) {
            u[c] -= du[c];
            if (std::fabs(u[c]) > clamp_range)
                throw SolveError("newton solve diverged at (" + std::to_string(x) + "," +
                                 std::to_string(y) + ")");
        }
    }
    throw SolveError("newton solve failed to converge at (" + std::to_string(x) + "," +
                     std::to_string(y) + ")");
}

namespace {

// Effective forcing at t_next as a field, for the paths that need one:
// gradient-coupled problems (advection assembled from the candidate velocity)
// and projected linear problems (solenoidal part of the analytic forcing).
// Returns an empty optional when the pointwise evaluator suffices.
std::optional<TreeField> effective_forcing_field(const Problem& problem,
                                                 const TreeField* u_candidate, double t_next,
                                                 const StepperOptions& opts, double* nl_time,
                                                 double* proj_time) {
    if (problem.kind() == Problem::Kind::GradientCoupled) {
        auto t0 = Clock::now();
        auto raw = ns_nonlinear(*u_candidate, problem, t_next);
        if (nl_time) *nl_time += seconds_since(t0);
        auto t1 = Clock::now();
        auto dec = helmholtz_decompose(raw, opts.eps, opts.helmholtz_grid_cap);
        if (proj_time) *proj_time += seconds_since(t1);
        dec.solenoidal.set_time(t_next);
        return std::move(dec.solenoidal);
    }
    if (problem.needs_projection()) {
        auto raw = build_adaptive([&](double x, double y, std::span<double> out) {
            problem.forcing({}, x, y, t_next, out);
        }, problem.ncomp(), opts.eps, opts.K, opts.max_level, opts.adapt_l2_metric);
        raw.set_time(t_next);
        auto t1 = Clock::now();
        auto dec = helmholtz_decompose(raw, opts.eps, opts.helmholtz_grid_cap);
        if (proj_time) *proj_time += seconds_since(t1);
        dec.solenoidal.set_time(t_next);
        return std::move(dec.solenoidal);
    }
    return std::nullopt;
}

} // namespace

TreeField forcing_field(const TreeField& u, const Problem& problem, double t,
                        const StepperOptions& opts, double* t_proj) {
    if (problem.kind() == Problem::Kind::GradientCoupled || problem.needs_projection()) {
        auto f = effective_forcing_field(problem, &u, t, opts, nullptr, t_proj);
        // keep the stored field on the solution tree
        auto r = resample_to_tree(*f, u.tree());
        r.set_time(t);
        return r;
    }
    int K = u.order();
    int p = problem.ncomp();
    const auto& e = cheb_engine(K);
    TreeField F(u.tree(), p, K);
    F.set_time(t);
    F.set_resolve_eps(u.resolve_eps());
    std::vector<double> uv(p), fv(p);
    for (auto id : u.tree().leaves()) {
        const Box& b = u.tree().node(id).box;
        auto key = box_key(b);
        std::vector<LeafGrid> grids;
        grids.reserve(p);
        for (int c = 0; c < p; ++c) grids.push_back(coeffs2vals(u.patch(key, c)));
        std::vector<std::vector<double>> fvals(p, std::vector<double>(K * K));
        for (int bb = 0; bb < K; ++bb)
            for (int aa = 0; aa < K; ++aa) {
                for (int c = 0; c < p; ++c) uv[c] = grids[c].val[bb * K + aa];
                problem.forcing(uv, grids[0].node_x(aa), grids[0].node_y(bb), t, fv);
                for (int c = 0; c < p; ++c) fvals[c][bb * K + aa] = fv[c];
            }
        for (int c = 0; c < p; ++c) e.values_to_coeffs(fvals[c].data(), F.coeffs(key, c).data());
    }
    return F;
}

SolverState make_initial_state(const Problem& problem, const MultistepScheme& scheme,
                               const StepperOptions& opts) {
    SolverState s;
    s.u = build_adaptive([&](double x, double y, std::span<double> out) {
        problem.initial(x, y, out);
    }, problem.ncomp(), opts.eps, opts.K, opts.max_level, opts.adapt_l2_metric, opts.min_level);
    s.u.set_time(0.0);
    s.history.capacity = std::max(1, scheme.order);
    s.history.push(forcing_field(s.u, problem, 0.0, opts));
    return s;
}

namespace {

struct PhaseTimes {
    double fgt = 0, proj = 0, nl = 0, adapt = 0;
};

StepReport finish_step(SolverState& state, const Problem& problem, const StepperOptions& opts,
                       const AdaptProvider& provider, bool test_u,
                       const std::optional<TreeField>& forcing_precomputed, PhaseTimes& ph,
                       int nl_max, Clock::time_point t_begin, double t_next) {
    auto t0 = Clock::now();
    auto adapted = spatial_adapt(state.u.tree(), problem.ncomp(), opts.K, provider, opts.eps,
                                 opts.max_level, test_u);
    ph.adapt += seconds_since(t0) - ph.nl; // pointwise solves run inside the sweep

    adapted.u.set_time(t_next);
    state.u = std::move(adapted.u);
    if (forcing_precomputed) {
        auto F = resample_to_tree(*forcing_precomputed, state.u.tree());
        F.set_time(t_next);
        state.history.push(std::move(F));
    } else {
        state.history.push(forcing_field(state.u, problem, t_next, opts, &ph.proj));
    }
    state.t = t_next;
    ++state.step;

    StepReport rep;
    rep.step = state.step;
    rep.t = state.t;
    rep.n_leaf = state.u.tree().leaf_count();
    rep.n_pts = state.u.point_count();
    rep.t_fgt = ph.fgt;
    rep.t_proj = ph.proj;
    rep.t_nl = ph.nl;
    rep.t_adapt = std::max(ph.adapt, 0.0);
    rep.t_total = seconds_since(t_begin);
    rep.nl_iters_max = nl_max;
    rep.refined = adapted.refined;
    rep.coarsened = adapted.coarsened;
    return rep;
}

} // namespace

StepReport advance(SolverState& state, const MultistepScheme& scheme, const Problem& problem,
                   const StepperOptions& opts) {
    auto t_begin = Clock::now();
    PhaseTimes ph;
    const double dt = opts.dt;
    const double t_next = state.t + dt;
    auto D = problem.diffusion();
    const double eps_nl = nl_tolerance(opts);
    double scale = 1.0;
    for (int c = 0; c < state.u.ncomp(); ++c) scale = std::max(scale, state.u.max_abs(c));
    const double clamp = 10.0 * scale + 10.0;

    if (scheme.kind == SchemeKind::Implicit &&
        problem.kind() == Problem::Kind::GradientCoupled)
        throw SolveError("gradient-coupled forcing requires an explicit or "
                         "predictor-corrector scheme");

    int count = scheme.history_needed();
    auto t0 = Clock::now();
    auto transforms = history_transforms(state, count, D, dt, opts.eps, opts.max_level);
    auto ipot = initial_potential(state.u, D, dt, opts.eps, opts.max_level);
    ph.fgt += seconds_since(t0);

    std::atomic<int> nl_max{0};
    std::atomic<double> nl_time{0.0};
    const TreeField u_prev = state.u;
    const double t_prev = state.t;
    const int p = problem.ncomp();

    if (scheme.kind == SchemeKind::Implicit) {
        auto g = combine(ipot, transforms, scheme.b, dt, opts.eps, count);
        g.set_time(t_next);
        const double b0 = scheme.b[0];
        auto Ffield = effective_forcing_field(problem, nullptr, t_next, opts, &ph.nl, &ph.proj);
        AdaptProvider provider;
        if (problem.kind() == Problem::Kind::Linear) {
            provider = [&, b0](double x, double y, std::span<double> u, std::span<double> F) {
                if (Ffield)
                    Ffield->eval(x, y, F);
                else
                    problem.forcing({}, x, y, t_next, F);
                std::vector<double> gv(p);
                g.eval(x, y, gv);
                for (int c = 0; c < p; ++c) u[c] = gv[c] + dt * b0 * F[c];
            };
        } else if (p == 1) {
            provider = [&, b0](double x, double y, std::span<double> u, std::span<double> F) {
                auto ts = Clock::now();
                double gv = g.eval1(x, y);
                double up = u_prev.eval1(x, y);
                auto r = solve_pointwise_scalar(gv, problem, dt, b0, t_next, x, y, up, t_prev,
                                                eps_nl, opts.max_nonlinear_iter, clamp);
                u[0] = r.value;
                int prev = nl_max.load();
                while (r.iters > prev && !nl_max.compare_exchange_weak(prev, r.iters)) {}
                problem.forcing(std::span<const double>(&u[0], 1), x, y, t_next, F);
                nl_time.fetch_add(seconds_since(ts));
            };
        } else {
            provider = [&, b0](double x, double y, std::span<double> u, std::span<double> F) {
                auto ts = Clock::now();
                std::vector<double> gv(p), up(p);
                g.eval(x, y, gv);
                u_prev.eval(x, y, up);
                int iters = solve_pointwise_system(gv, problem, dt, b0, t_next, x, y, up, u,
                                                   eps_nl, opts.max_nonlinear_iter, clamp);
                int prev = nl_max.load();
                while (iters > prev && !nl_max.compare_exchange_weak(prev, iters)) {}
                problem.forcing(std::span<const double>(u.data(), p), x, y, t_next, F);
                nl_time.fetch_add(seconds_since(ts));
            };
        }
        auto wrapped = [&](double x, double y, std::span<double> u, std::span<double> F) {
            provider(x, y, u, F);
        };
        PhaseTimes local = ph;
        auto rep = [&] {
            auto r0 = Clock::now();
            auto adapted = spatial_adapt(state.u.tree(), p, opts.K, wrapped, opts.eps,
                                         opts.max_level, false);
            local.nl += nl_time.load();
            local.adapt += seconds_since(r0) - nl_time.load();
            adapted.u.set_time(t_next);
            state.u = std::move(adapted.u);
            if (Ffield) {
                auto F = resample_to_tree(*Ffield, state.u.tree());
                F.set_time(t_next);
                state.history.push(std::move(F));
            } else {
                state.history.push(forcing_field(state.u, problem, t_next, opts, &local.proj));
            }
            state.t = t_next;
            ++state.step;
            StepReport r;
            r.step = state.step;
            r.t = state.t;
            r.n_leaf = state.u.tree().leaf_count();
            r.n_pts = state.u.point_count();
            r.t_fgt = local.fgt;
            r.t_proj = local.proj;
            r.t_nl = local.nl;
            r.t_adapt = std::max(local.adapt, 0.0);
            r.t_total = seconds_since(t_begin);
            r.nl_iters_max = nl_max.load();
            r.refined = adapted.refined;
            r.coarsened = adapted.coarsened;
            return r;
        }();
        return rep;
    }

    if (scheme.kind == SchemeKind::Explicit) {
        auto unew = combine(ipot, transforms, scheme.b, dt, opts.eps, count);
        unew.set_time(t_next);
        auto Ffield = effective_forcing_field(problem, &unew, t_next, opts, &ph.nl, &ph.proj);
        AdaptProvider provider = [&](double x, double y, std::span<double> u,
                                     std::span<double> F) {
            std::vector<double> uv(p);
            unew.eval(x, y, uv);
            for (int c = 0; c < p; ++c) u[c] = uv[c];
            if (Ffield)
                Ffield->eval(x, y, F);
            else
                problem.forcing(uv, x, y, t_next, F);
        };
        return finish_step(state, problem, opts, provider, true, Ffield, ph, 0, t_begin, t_next);
    }

    // predictor-corrector (PECE): Adams-Bashforth predictor, then one
    // Adams-Moulton correction with F(u_pred) occupying the b0 slot.
    auto ab = MultistepScheme::adams_bashforth(scheme.order);
    auto upred = combine(ipot, transforms, ab.b, dt, opts.eps, count);
    upred.set_time(t_next);
    auto Fpred = effective_forcing_field(problem, &upred, t_next, opts, &ph.nl, &ph.proj);
    TreeField Fpred_field;
    if (Fpred)
        Fpred_field = std::move(*Fpred);
    else
        Fpred_field = forcing_field(upred, problem, t_next, opts, &ph.proj);

    std::vector<const TreeField*> ops{&ipot, &Fpred_field};
    std::vector<double> w{1.0, dt * scheme.b[0]};
    for (int i = 1; i <= scheme.order - 1; ++i) {
        if (scheme.b[i] == 0.0) continue;
        ops.push_back(&transforms[i - 1]);
        w.push_back(dt * scheme.b[i]);
    }
    auto ucorr = weighted_sum(ops, w);
    ucorr.coarsen_resolved(opts.eps);
    ucorr.set_time(t_next);

    // the corrected state's forcing (reused for the refinement test and storage)
    std::optional<TreeField> Fcorr;
    if (problem.kind() == Problem::Kind::GradientCoupled)
        Fcorr = effective_forcing_field(problem, &ucorr, t_next, opts, &ph.nl, &ph.proj);
    else if (problem.needs_projection())
        Fcorr = std::move(Fpred_field); // linear forcing does not depend on u
    AdaptProvider provider = [&](double x, double y, std::span<double> u, std::span<double> F) {
        std::vector<double> uv(p);
        ucorr.eval(x, y, uv);
        for (int c = 0; c < p; ++c) u[c] = uv[c];
        if (Fcorr)
            Fcorr->eval(x, y, F);
        else
            problem.forcing(uv, x, y, t_next, F);
    };
    return finish_step(state, problem, opts, provider, true, Fcorr, ph, 0, t_begin, t_next);
}

StepReport advance_auto(SolverState& state, const MultistepScheme& scheme, const Problem& problem,
                        const StepperOptions& opts) {
    int have = static_cast<int>(state.history.forcing.size());
    MultistepScheme use = scheme;
    if (scheme.history_needed() > have) {
        if (scheme.kind == SchemeKind::Implicit)
            throw SolveError("advance_auto: cannot start " + scheme.name());
        int s = have;
        if (s == 3) s = 2; // the family has no order-3 member
        if (s < 1) throw SolveError("advance_auto: empty history");
        use = scheme.kind == SchemeKind::Explicit ? MultistepScheme::adams_bashforth(s)
                                                  : MultistepScheme::predictor_corrector(s);
    }
    auto rep = advance(state, use, problem, opts);
    state.history.capacity = std::max(state.history.capacity, scheme.order);
    return rep;
}

void bootstrap_richardson(SolverState& state, const MultistepScheme& scheme,
                          const Problem& problem, const StepperOptions& opts) {
    if (scheme.order <= 2) return;
    if (state.step != 0) throw SolveError("bootstrap_richardson: state already advanced");
    int needed = scheme.kind == SchemeKind::Implicit ? scheme.order - 2 : scheme.order - 1;

    MultistepScheme base = scheme.kind == SchemeKind::Implicit
                               ? MultistepScheme::adams_moulton(2)
                               : (scheme.kind == SchemeKind::Explicit
                                      ? MultistepScheme::adams_bashforth(2)
                                      : MultistepScheme::predictor_corrector(2));

    const SolverState fresh = state;
    std::vector<TreeField> states;
    for (int m = 1; m <= needed; ++m) {
        std::array<TreeField, 3> runs;
        int divs[3] = {1, 2, 4};
        for (int r = 0; r < 3; ++r) {
            SolverState sub = fresh;
            sub.history.capacity = std::max(2, sub.history.capacity);
            StepperOptions so = opts;
            so.dt = opts.dt / divs[r];
            for (int k = 0; k < m * divs[r]; ++k) advance_auto(sub, base, problem, so);
            runs[r] = std::move(sub.u);
        }
        // Richardson tableau eliminating the h^2 and h^3 terms of the
        // order-2 base scheme: u = (32 C - 12 B + A) / 21 + O(h^4).
        const TreeField* ops[3] = {&runs[0], &runs[1], &runs[2]};
        double w[3] = {1.0 / 21.0, -12.0 / 21.0, 32.0 / 21.0};
        auto um = weighted_sum(ops, w);
        um.coarsen_resolved(opts.eps);
        um.set_time(m * opts.dt);
        um.set_resolve_eps(opts.eps);
        states.push_back(std::move(um));
    }

    state.history.capacity = std::max(state.history.capacity, scheme.order);
    for (int m = 1; m <= needed; ++m)
        state.history.push(forcing_field(states[m - 1], problem, m * opts.dt, opts));
    state.u = std::move(states.back());
    state.step = needed;
    state.t = needed * opts.dt;
}

} // namespace heatpot
