// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured quantities. Run via ctest (long timeout) or directly.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "heatpot/driver.hpp"
#include "heatpot/fgt.hpp"
#include "heatpot/helmholtz.hpp"
#include "heatpot/numutil.hpp"
#include "heatpot/oracles.hpp"
#include "heatpot/problems.hpp"
#include "heatpot/stepper.hpp"

using namespace heatpot;

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

void report(int criterion, bool pass, const std::string& what) {
    std::printf("[criterion %2d] %s  %s\n", criterion, pass ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
}

TreeField random_band_limited(int seed, double eps, int modes = 3) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    struct Mode {
        int nx, ny;
        double a, b;
    };
    std::vector<Mode> ms;
    for (int nx = 0; nx <= modes; ++nx)
        for (int ny = -modes; ny <= modes; ++ny) ms.push_back({nx, ny, u(rng), u(rng)});
    auto f = [ms](double x, double y, std::span<double> out) {
        double s = 0.0;
        for (const auto& m : ms)
            s += m.a * std::cos(kTwoPi * (m.nx * x + m.ny * y)) +
                 m.b * std::sin(kTwoPi * (m.nx * x + m.ny * y));
        out[0] = s;
    };
    return build_adaptive(f, 1, eps, 8, 10);
}

std::vector<Vec2> random_points(int n, int seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<Vec2> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng)};
    return pts;
}

double slope_of(const std::vector<double>& dts, const std::vector<double>& errs) {
    std::vector<double> lx, ly;
    for (std::size_t k = 0; k < dts.size(); ++k) {
        lx.push_back(std::log(dts[k]));
        ly.push_back(std::log(errs[k]));
    }
    return fit_slope(lx, ly);
}

// discrete l2 against an exact evaluator on an M x M uniform sampling
double l2_vs(const TreeField& u, const std::function<void(double, double, std::span<double>)>& ex,
             int M) {
    std::vector<double> uv(u.ncomp()), ev(u.ncomp());
    double acc = 0.0;
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) {
            double x = -0.5 + (i + 0.5) / static_cast<double>(M);
            double y = -0.5 + (j + 0.5) / static_cast<double>(M);
            u.eval(x, y, uv);
            ex(x, y, ev);
            for (int c = 0; c < u.ncomp(); ++c) acc += (uv[c] - ev[c]) * (uv[c] - ev[c]);
        }
    return std::sqrt(acc / (M * M));
}

} // namespace

TEST_CASE("criterion 1: fgt matches the direct transform oracle") {
    auto pts = random_points(500, 71);
    bool all = true;
    double worst_ratio = 0.0;
    int seed = 600;
    for (double eps : {1e-6, 1e-9}) {
        auto src = random_band_limited(seed++, eps);
        double scale = src.max_abs(0);
        for (double delta : {1e-4, 1e-3, 1e-2, 1e-1}) {
            const auto& plan = fgt_plan(delta, eps, 8);
            auto got = plan.apply(src);
            auto ref = oracles::direct_gauss_transform(src, delta, pts);
            double worst = 0.0;
            for (std::size_t k = 0; k < pts.size(); ++k)
                worst = std::max(worst, std::fabs(got.eval1(pts[k].x, pts[k].y) - ref[k]));
            double ratio = worst / (5.0 * eps * scale);
            worst_ratio = std::max(worst_ratio, ratio);
            if (ratio > 1.0) all = false;
        }
    }
    report(1, all, "max error / (5 eps ||u||) = " + sci(worst_ratio) +
                       " over delta {1e-4..1e-1}, eps {1e-6, 1e-9}, 500 points");
    CHECK(all);
}

TEST_CASE("criterion 2: Fourier multiplier identity to eps") {
    bool all = true;
    double worst = 0.0;
    for (double delta : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        const auto& plan = fgt_plan(delta, 1e-9, 8);
        for (int n : {1, 2, 4, 8}) {
            auto src = build_adaptive([n](double x, double y, std::span<double> o) {
                o[0] = std::cos(kTwoPi * (n * x + n * y));
            }, 1, 1e-9, 8, 10);
            auto v = plan.apply(src);
            double mult = std::exp(-kPi * kPi * delta * 2.0 * n * n);
            std::mt19937 rng(n);
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            double w = 0.0;
            for (int t = 0; t < 100; ++t) {
                double x = u(rng), y = u(rng);
                w = std::max(w, std::fabs(v.eval1(x, y) -
                                          mult * std::cos(kTwoPi * (n * x + n * y))));
            }
            worst = std::max(worst, w);
            if (w > 1e-9) all = false;
        }
        // axis-aligned modes as well
        for (int n : {3, 8}) {
            auto src = build_adaptive([n](double x, double, std::span<double> o) {
                o[0] = std::cos(kTwoPi * n * x);
            }, 1, 1e-9, 8, 10);
            auto v = plan.apply(src);
            double mult = std::exp(-kPi * kPi * delta * n * n);
            double w = 0.0;
            for (int t = 0; t < 100; ++t) {
                double x = -0.5 + t / 100.0;
                w = std::max(w, std::fabs(v.eval1(x, 0.21) - mult * std::cos(kTwoPi * n * x)));
            }
            worst = std::max(worst, w);
            if (w > 1e-9) all = false;
        }
    }
    report(2, all, "max |apply(cos) - multiplier cos| = " + sci(worst) +
                       " (tolerance 1e-9, spectral mode included)");
    CHECK(all);
}

TEST_CASE("criterion 3: semigroup property to 10 eps") {
    bool all = true;
    double worst = 0.0;
    const double eps = 1e-9;
    for (int trial = 0; trial < 5; ++trial) {
        auto src = random_band_limited(800 + trial, eps);
        double scale = std::max(1.0, src.max_abs(0));
        double d1 = 1e-3 * (1.0 + trial), d2 = 2.5e-3;
        const auto& p1 = fgt_plan(d1, eps, 8);
        const auto& p2 = fgt_plan(d2, eps, 8);
        const auto& p12 = fgt_plan(d1 + d2, eps, 8);
        auto two = p2.apply(p1.apply(src));
        auto one = p12.apply(src);
        std::mt19937 rng(trial);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        double w = 0.0;
        for (int t = 0; t < 200; ++t) {
            double x = u(rng), y = u(rng);
            w = std::max(w, std::fabs(two.eval1(x, y) - one.eval1(x, y)));
        }
        worst = std::max(worst, w / scale);
        if (w > 10.0 * eps * scale) all = false;
    }
    report(3, all, "max |apply(d1).apply(d2) - apply(d1+d2)| / ||u|| = " + sci(worst) +
                       " (tolerance 1e-8, 5 random fields)");
    CHECK(all);
}

TEST_CASE("criterion 4: unconditional stability at 1000x the FD limit") {
    // sharp spot forces level-8 leaves; no forcing afterwards
    class SharpSpot final : public Problem {
    public:
        std::string name() const override { return "sharp_spot"; }
        int ncomp() const override { return 1; }
        Kind kind() const override { return Kind::Linear; }
        std::vector<double> diffusion() const override { return {1.0}; }
        void initial(double x, double y, std::span<double> out) const override {
            out[0] = std::exp(-periodic_dist2({x, y}, {0.11, -0.07}) / 2e-5);
        }
        void forcing(std::span<const double>, double, double, double,
                     std::span<double> out) const override {
            out[0] = 0.0;
        }
    } prob;

    StepperOptions opts;
    opts.eps = 1e-9;
    opts.max_level = 12;
    opts.min_level = 4; // the spot is far below the root grid's sampling scale
    auto scheme = MultistepScheme::adams_moulton(2);
    auto state = make_initial_state(prob, scheme, opts);
    int depth = state.u.tree().max_depth();

    // smallest node spacing of the initial grid
    const auto& nodes = cheb_engine(8).nodes;
    double min_gap = 2.0;
    for (int a = 0; a + 1 < 8; ++a) min_gap = std::min(min_gap, nodes[a + 1] - nodes[a]);
    double h_min = 0.5 * std::ldexp(1.0, -depth) * min_gap;
    opts.dt = 1000.0 * h_min * h_min / 2.0;

    double bound = state.u.max_abs(0) * (1.0 + 1e-6) + 1e-8;
    bool ok = depth >= 8;
    double peak = 0.0;
    for (int k = 0; k < 100 && ok; ++k) {
        advance(state, scheme, prob, opts);
        peak = std::max(peak, state.u.max_abs(0));
        if (peak > bound) ok = false;
    }
    report(4, ok, "depth=" + std::to_string(depth) + " dt=" + sci(opts.dt) +
                      " (=1000 h_min^2/2D), 100 steps, peak/bound = " +
                      sci(peak / bound));
    CHECK(ok);
}

TEST_CASE("criterion 5: heat convergence orders against the dense Duhamel oracle") {
    const double T = 0.01, eps = 1e-9, width = 2.5e-3;
    const int M = 128;
    auto u0 = oracles::UniformGridField{};
    u0.M = M;
    u0.ncomp = 1;
    u0.data.assign(static_cast<std::size_t>(M) * M, 0.0);
    auto forcing = [width](double x, double y, double t) { return heat_forcing(x, y, t, width); };
    std::printf("[criterion  5] computing dense Duhamel reference (128^2)...\n");
    std::fflush(stdout);
    auto ref = oracles::duhamel_dense(forcing, u0, 1.0, T);

    ProblemParams pp;
    pp.forcing_width = width;
    auto prob = make_problem("forced_heat", pp);
    auto err_at = [&](const TreeField& u) {
        double acc = 0.0;
        std::vector<double> uv(1);
        for (int j = 0; j < M; ++j)
            for (int i = 0; i < M; ++i) {
                u.eval(ref.x(i), ref.y(j), uv);
                double d = uv[0] - ref.at(i, j);
                acc += d * d;
            }
        return std::sqrt(acc / (M * M));
    };

    auto run_scheme = [&](const MultistepScheme& scheme, const std::vector<int>& ns) {
        std::vector<double> dts, errs;
        for (int n : ns) {
            StepperOptions opts;
            opts.dt = T / n;
            opts.eps = eps;
            auto st = make_initial_state(*prob, scheme, opts);
            if (scheme.order > 2) bootstrap_richardson(st, scheme, *prob, opts);
            while (st.step < n) advance_auto(st, scheme, *prob, opts);
            dts.push_back(opts.dt);
            errs.push_back(err_at(st.u));
            std::printf("[criterion  5]   %s n=%3d err=%.3e\n", scheme.name().c_str(), n,
                        errs.back());
            std::fflush(stdout);
        }
        return slope_of(dts, errs);
    };

    double k_ab2 = run_scheme(MultistepScheme::adams_bashforth(2), {16, 32, 64, 128, 256});
    double k_am2 = run_scheme(MultistepScheme::adams_moulton(2), {16, 32, 64, 128, 256});
    double k_am4 = run_scheme(MultistepScheme::adams_moulton(4), {4, 8, 16, 32});
    bool ok = std::fabs(k_ab2 - 2.0) <= 0.2 && std::fabs(k_am2 - 2.0) <= 0.2 &&
              std::fabs(k_am4 - 4.0) <= 0.4;
    report(5, ok, "orders: AB2 = " + sci(k_ab2) + ", AM2 = " + sci(k_am2) +
                      " (2.0 +- 0.2), AM4 = " + sci(k_am4) + " (4.0 +- 0.4)");
    CHECK(ok);
}

TEST_CASE("criterion 6: Gray-Scott convergence (desk scale, finest run as reference)") {
    RunConfig cfg;
    cfg.problem = "gray_scott";
    cfg.t_final = 10.0;
    cfg.eps = 1e-9;
    cfg.resample_resolution = 64;

    cfg.scheme = "am2";
    auto t2 = run_convergence(cfg, {25, 50, 100});
    std::vector<double> dts, errs;
    for (auto& r : t2.rows) {
        dts.push_back(cfg.t_final / r.n_steps);
        errs.push_back(r.error);
        std::printf("[criterion  6]   am2 n=%3d err=%.3e\n", r.n_steps, r.error);
    }
    double k_am2 = slope_of(dts, errs);

    cfg.scheme = "am4";
    auto t4 = run_convergence(cfg, {20, 40, 80});
    dts.clear();
    errs.clear();
    for (auto& r : t4.rows) {
        dts.push_back(cfg.t_final / r.n_steps);
        errs.push_back(r.error);
        std::printf("[criterion  6]   am4 n=%3d err=%.3e\n", r.n_steps, r.error);
    }
    double k_am4 = slope_of(dts, errs);
    bool ok = std::fabs(k_am2 - 2.0) <= 0.3 && std::fabs(k_am4 - 4.0) <= 0.5;
    report(6, ok, "orders: AM2 = " + sci(k_am2) + " (2.0 +- 0.3), AM4 = " +
                      sci(k_am4) +
                      " (4.0 +- 0.5); absolute errors use our own reference, not the "
                      "published table");
    CHECK(ok);
}

TEST_CASE("criterion 7: unsteady Stokes orders against the closed-form solution") {
    ProblemParams pp;
    pp.nu = 1.0;
    auto prob = make_problem("stokes_manufactured", pp);
    const double T = 0.1, eps = 1e-9;

    auto run_scheme = [&](const MultistepScheme& scheme, const std::vector<int>& ns,
                          std::vector<double>& dts, std::vector<double>& errs) {
        for (int n : ns) {
            StepperOptions opts;
            opts.dt = T / n;
            opts.eps = eps;
            auto st = make_initial_state(*prob, scheme, opts);
            if (scheme.order > 2) bootstrap_richardson(st, scheme, *prob, opts);
            while (st.step < n) advance_auto(st, scheme, *prob, opts);
            dts.push_back(opts.dt);
            errs.push_back(l2_vs(st.u, [&](double x, double y, std::span<double> o) {
                prob->exact(x, y, T, o);
            }, 64));
            std::printf("[criterion  7]   %s n=%3d err=%.3e\n", scheme.name().c_str(), n,
                        errs.back());
            std::fflush(stdout);
        }
    };

    std::vector<double> dts2, errs2, dts4, errs4;
    run_scheme(MultistepScheme::adams_moulton(2), {16, 32, 64, 128}, dts2, errs2);
    run_scheme(MultistepScheme::adams_moulton(4), {8, 16, 32, 64}, dts4, errs4);
    double k_am2 = slope_of(dts2, errs2);
    // asymptotic (finest-pair) order for the fourth-order scheme
    double k_am4_tail = std::log(errs4[errs4.size() - 2] / errs4.back()) / std::log(2.0);
    bool ok = std::fabs(k_am2 - 2.0) <= 0.2 && k_am4_tail >= 3.5;
    report(7, ok, "orders: AM2 = " + sci(k_am2) + " (2.0 +- 0.2), AM4 asymptotic = " +
                      sci(k_am4_tail) + " (>= 3.5)");
    CHECK(ok);
}

TEST_CASE("criterion 8: Helmholtz decomposition quality") {
    const double eps = 1e-9;
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-0.5, 0.5);

    // band-limited random field
    auto F = [&] {
        std::mt19937 r2(55);
        std::uniform_real_distribution<double> a(-1.0, 1.0);
        struct M {
            int nx, ny;
            double c0, s0, c1, s1;
        };
        std::vector<M> ms;
        for (int nx = 0; nx <= 3; ++nx)
            for (int ny = -3; ny <= 3; ++ny)
                if (nx || ny) ms.push_back({nx, ny, a(r2), a(r2), a(r2), a(r2)});
        return build_adaptive([ms](double x, double y, std::span<double> o) {
            o[0] = o[1] = 0.0;
            for (const auto& m : ms) {
                double c = std::cos(kTwoPi * (m.nx * x + m.ny * y));
                double s = std::sin(kTwoPi * (m.nx * x + m.ny * y));
                o[0] += m.c0 * c + m.s0 * s;
                o[1] += m.c1 * c + m.s1 * s;
            }
        }, 2, eps, 8, 10);
    }();
    double scale = std::max(F.max_abs(0), F.max_abs(1));
    auto dec = helmholtz_decompose(F, eps);

    double recon = 0.0;
    for (int t = 0; t < 500; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> fs(2), fg(2), fv(2);
        dec.solenoidal.eval(x, y, fs);
        dec.gradient.eval(x, y, fg);
        F.eval(x, y, fv);
        recon = std::max({recon, std::fabs(fs[0] + fg[0] - fv[0]),
                          std::fabs(fs[1] + fg[1] - fv[1])});
    }

    // spectral divergence of F_S on a 64 x 64 sampling
    const int M = 64;
    auto g0 = oracles::sample_uniform([&](double x, double y) { return dec.solenoidal.eval1(x, y, 0); }, M);
    auto g1 = oracles::sample_uniform([&](double x, double y) { return dec.solenoidal.eval1(x, y, 1); }, M);
    auto m0 = oracles::naive_dft(g0);
    auto m1 = oracles::naive_dft(g1);
    double div_spec = 0.0;
    for (int k2 = -M / 2; k2 < M / 2; ++k2)
        for (int k1 = -M / 2; k1 < M / 2; ++k1) {
            std::size_t idx = static_cast<std::size_t>(k2 + M / 2) * M + (k1 + M / 2);
            div_spec = std::max(div_spec, std::abs(m0[idx] * static_cast<double>(k1) +
                                                   m1[idx] * static_cast<double>(k2)));
        }

    // pure gradient and pure curl recovery
    auto grad = build_adaptive([](double, double y, std::span<double> o) {
        o[0] = 0.0;
        o[1] = -kTwoPi * std::sin(kTwoPi * y);
    }, 2, eps, 8, 10);
    auto dg = helmholtz_decompose(grad, eps);
    auto curl = build_adaptive([](double x, double y, std::span<double> o) {
        o[0] = kTwoPi * std::sin(kTwoPi * x) * std::cos(kTwoPi * y);
        o[1] = -kTwoPi * std::cos(kTwoPi * x) * std::sin(kTwoPi * y);
    }, 2, eps, 8, 10);
    auto dc = helmholtz_decompose(curl, eps);
    double pure = 0.0;
    for (int t = 0; t < 200; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> a(2), b(2);
        dg.solenoidal.eval(x, y, a);
        dc.gradient.eval(x, y, b);
        pure = std::max({pure, std::fabs(a[0]), std::fabs(a[1]), std::fabs(b[0]),
                         std::fabs(b[1])});
    }
    double grad_scale = kTwoPi; // amplitude of both probe fields

    bool ok = recon <= 10.0 * eps * scale && div_spec <= 100.0 * eps * scale &&
              pure <= 10.0 * eps * grad_scale * 1.0 + 1e-12;
    report(8, ok, "reconstruction = " + sci(recon / scale) +
                      " ||F|| (<= 1e-8), spectral div = " + sci(div_spec / scale) +
                      " ||F|| (<= 1e-7), pure-field leakage = " + sci(pure));
    CHECK(ok);
}

TEST_CASE("criterion 9: Taylor-Green decay with the order-4 predictor-corrector") {
    ProblemParams pp;
    pp.nu = 0.01;
    auto prob = make_problem("taylor_green", pp);
    StepperOptions opts;
    opts.dt = 0.01;
    opts.eps = 1e-9;
    auto scheme = MultistepScheme::predictor_corrector(4);
    auto st = make_initial_state(*prob, scheme, opts);
    bootstrap_richardson(st, scheme, *prob, opts);
    while (st.step < 10) advance(st, scheme, *prob, opts);
    double err = l2_vs(st.u, [&](double x, double y, std::span<double> o) {
        prob->exact(x, y, 0.1, o);
    }, 64);
    bool ok = err <= 1e-6;
    report(9, ok, "L2 error vs u0 exp(-8 pi^2 nu t) at T=0.1: " + sci(err) +
                      " (<= 1e-6)");
    CHECK(ok);
}

TEST_CASE("criterion 10: shear-layer convergence of the order-4 predictor-corrector") {
    ProblemParams pp;
    pp.nu = 0.01;
    auto prob = make_problem("ns_shear_layer", pp);
    const double T = 0.4, eps = 1e-9;

    auto run_n = [&](int n) {
        StepperOptions opts;
        opts.dt = T / n;
        opts.eps = eps;
        auto scheme = MultistepScheme::predictor_corrector(4);
        auto st = make_initial_state(*prob, scheme, opts);
        bootstrap_richardson(st, scheme, *prob, opts);
        while (st.step < n) advance(st, scheme, *prob, opts);
        return std::move(st.u);
    };

    std::printf("[criterion 10] running n = 10, 20, 40 and the 80-step reference...\n");
    std::fflush(stdout);
    std::vector<int> ns{10, 20, 40};
    std::vector<TreeField> finals;
    for (int n : ns) {
        finals.push_back(run_n(n));
        std::printf("[criterion 10]   n=%2d done (leaves=%d)\n", n,
                    finals.back().tree().leaf_count());
        std::fflush(stdout);
    }
    auto refu = run_n(80);

    const int M = 64;
    std::vector<double> dts, errs;
    for (std::size_t k = 0; k < ns.size(); ++k) {
        double e = l2_vs(finals[k], [&](double x, double y, std::span<double> o) {
            refu.eval(x, y, o);
        }, M);
        dts.push_back(T / ns[k]);
        errs.push_back(e);
        std::printf("[criterion 10]   n=%2d err=%.3e\n", ns[k], e);
    }
    double k_pc4 = slope_of(dts, errs);
    bool ok = std::fabs(k_pc4 - 4.0) <= 0.7;
    report(10, ok, "PC4 order = " + sci(k_pc4) + " (4.0 +- 0.7, 80-step reference)");
    CHECK(ok);
}

TEST_CASE("criterion 11: the refined region tracks the fast forcing center") {
    // eps chosen so the amplitude-1 center refines one level deeper than the
    // amplitude-0.5 one (window measured from the per-level tail thresholds)
    RunConfig cfg;
    cfg.problem = "forced_heat";
    cfg.scheme = "ab2";
    cfg.dt = 1e-3;
    cfg.t_final = 0.1;
    cfg.eps = 6e-9;

    ProblemParams pp;
    auto prob = cfg.build_problem();
    auto scheme = cfg.make_scheme();
    auto opts = cfg.stepper_options();
    auto st = make_initial_state(*prob, scheme, opts);

    bool track_ok = true;
    int increases = 0, decreases = 0;
    int prev_leaves = st.u.tree().leaf_count();
    double worst_dist = 0.0;
    while (st.step < 100) {
        advance_auto(st, scheme, *prob, opts);
        int leaves = st.u.tree().leaf_count();
        if (leaves > prev_leaves) ++increases;
        if (leaves < prev_leaves) ++decreases;
        prev_leaves = leaves;
        if (st.step % 10 != 0) continue;
        double c1x = 0.25 * std::cos(20.0 * kPi * st.t);
        double c1y = 0.25 * std::sin(20.0 * kPi * st.t);
        int deepest = st.u.tree().max_depth();
        double sx = 0.0, sy = 0.0;
        int n = 0;
        for (auto id : st.u.tree().leaves()) {
            const Box& b = st.u.tree().node(id).box;
            if (b.level != deepest) continue;
            sx += c1x + periodic_delta(b.cx(), c1x);
            sy += c1y + periodic_delta(b.cy(), c1y);
            ++n;
        }
        double d = std::sqrt((sx / n - c1x) * (sx / n - c1x) + (sy / n - c1y) * (sy / n - c1y));
        worst_dist = std::max(worst_dist, d);
        if (d > 0.05) track_ok = false;
        std::printf("[criterion 11]   t=%.3f leaves=%d deepest=%d centroid dist to c1 = %.4f\n",
                    st.t, leaves, deepest, d);
        std::fflush(stdout);
    }
    bool ok = track_ok && increases > 0 && decreases > 0;
    report(11, ok, "max centroid distance to c1 = " + sci(worst_dist) +
                       " (<= 0.05); leaf count increases = " + std::to_string(increases) +
                       ", decreases = " + std::to_string(decreases));
    CHECK(track_ok);
    CHECK(increases > 0);
    CHECK(decreases > 0);
}

TEST_CASE("criterion 12: spatial adaptation is idempotent and preserves balance") {
    // run a few Gray-Scott steps; after each, check the brute-force balance
    // and that re-running the adaptation driver with the same provider is a
    // fixed point
    ProblemParams pp;
    auto prob = make_problem("gray_scott", pp);
    StepperOptions opts;
    opts.dt = 0.05;
    opts.eps = 1e-7;
    auto scheme = MultistepScheme::adams_moulton(2);
    auto st = make_initial_state(*prob, scheme, opts);
    bool balanced = true, idempotent = true;
    for (int k = 0; k < 3; ++k) {
        advance(st, scheme, *prob, opts);
        if (!st.u.tree().is_balanced_bruteforce()) balanced = false;

        // provider replays the computed fields
        const TreeField& u = st.u;
        const TreeField& F = st.history.forcing.front();
        AdaptProvider provider = [&](double x, double y, std::span<double> uo,
                                     std::span<double> fo) {
            u.eval(x, y, uo);
            F.eval(x, y, fo);
        };
        auto once = spatial_adapt(u.tree(), 2, 8, provider, opts.eps, opts.max_level, false);
        auto twice = spatial_adapt(once.u.tree(), 2, 8, provider, opts.eps, opts.max_level, false);
        if (twice.refined != 0 || twice.coarsened != 0) idempotent = false;
        if (twice.u.tree().leaf_count() != once.u.tree().leaf_count()) idempotent = false;
    }
    report(12, balanced && idempotent,
           std::string("balance check ") + (balanced ? "ok" : "VIOLATED") +
               ", second adaptation pass is a fixed point: " + (idempotent ? "yes" : "no"));
    CHECK(balanced);
    CHECK(idempotent);
}

TEST_CASE("criterion 13: linear-scaling throughput (informational)") {
    const double delta = 1e-3, eps = 1e-6;
    const auto& plan = fgt_plan(delta, eps, 8);
    std::vector<double> rates;
    for (int level : {4, 5, 6, 7}) {
        AdaptiveTree t;
        for (int r = 0; r < level; ++r)
            for (auto id : t.leaves()) t.subdivide(id);
        TreeField f(t, 1, 8);
        f.set_resolve_eps(eps);
        f.fill_from([](double x, double y, std::span<double> o) {
            o[0] = std::sin(kTwoPi * x) * std::cos(kTwoPi * y);
        });
        auto t0 = std::chrono::steady_clock::now();
        auto v = plan.apply(f);
        double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double rate = static_cast<double>(f.point_count()) / sec;
        rates.push_back(rate);
        std::printf("[criterion 13]   N=%8zu  %.3fs  %.3e pts/s\n", f.point_count(), sec, rate);
        std::fflush(stdout);
    }
    double ratio = *std::max_element(rates.begin(), rates.end()) /
                   *std::min_element(rates.begin(), rates.end());
    report(13, true, "rate variation over N = 1.6e4..6.7e7/64: " + sci(ratio) +
                         "x (informational; not asserted)");
    CHECK(true);
}
