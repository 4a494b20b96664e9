#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "heatpot/errors.hpp"
#include "heatpot/fgt.hpp"
#include "heatpot/numutil.hpp"
#include "heatpot/oracles.hpp"

using namespace heatpot;

namespace {

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

} // namespace

TEST_CASE("heat kernel integrates to one and flattens for large D tau") {
    // composite quadrature of the kernel over D (separable: 1D factor)
    const auto& gl = gauss_legendre(24);
    for (double tau : {1e-3, 1e-2, 0.3}) {
        double mass1d = 0.0;
        int panels = 16;
        for (int p = 0; p < panels; ++p) {
            double a = -0.5 + static_cast<double>(p) / panels;
            double b = a + 1.0 / panels;
            for (std::size_t q = 0; q < gl.nodes.size(); ++q)
                mass1d += 0.5 * (b - a) * gl.weights[q] *
                          heat_kernel_1d(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[q], tau);
        }
        CHECK(mass1d == doctest::Approx(1.0).epsilon(1e-12));
        double mass2d = mass1d * mass1d;
        CHECK(mass2d == doctest::Approx(1.0).epsilon(1e-11));
    }
    // G -> 1 uniformly, |G - 1| <= ~4 exp(-4 pi^2 D tau)
    double dt = 0.5;
    double bound = 5.0 * std::exp(-4.0 * kPi * kPi * dt);
    for (double x : {0.0, 0.13, -0.37})
        for (double y : {0.02, 0.49}) CHECK(std::fabs(heat_kernel(x, y, dt, 1.0) - 1.0) < bound);
    CHECK_THROWS_AS((void)heat_kernel(0.1, 0.1, -1.0, 1.0), Error);
}

TEST_CASE("image and Fourier kernel branches agree in the crossover regime") {
    double dt = 0.02;
    for (double x : {0.0, 0.1, 0.25, 0.49, -0.33}) {
        double gi = heat_kernel_1d(x, dt, KernelBranch::Images);
        double gf = heat_kernel_1d(x, dt, KernelBranch::Fourier);
        CHECK(gi == doctest::Approx(gf).epsilon(1e-12));
    }
}

TEST_CASE("plan selects the cutoff level by the kernel-decay criterion") {
    // e^{-D_cut^2/delta} < eps  <=>  D_cut^2 >= delta ln(1/eps); the plan
    // picks the deepest level that still satisfies it.
    auto plan = FgtPlan::build(4e-3, 1e-12, 8);
    CHECK_FALSE(plan.spectral());
    double L = std::log(1e12);
    double dcut = std::ldexp(1.0, -plan.cutoff_level());
    CHECK(dcut * dcut >= 4e-3 * L);
    CHECK(0.25 * dcut * dcut < 4e-3 * L); // one level deeper fails
    CHECK(plan.plane_wave_error() < 1e-13);

    // kernel wider than the box: spectral mode
    auto wide = FgtPlan::build(1.0, 1e-9, 8);
    CHECK(wide.spectral());
    auto wide2 = FgtPlan::build(0.08, 1e-9, 8);
    CHECK(wide2.spectral());

    CHECK_THROWS_AS((void)FgtPlan::build(-1.0, 1e-9, 8), PlanError);
    CHECK_THROWS_AS((void)FgtPlan::build(1e-3, 1e-14, 8), PlanError);
}

TEST_CASE("plane-wave sweep stays within eps/10 for a spread of deltas") {
    for (double delta : {1e-4, 1e-3, 1e-2})
        for (double eps : {1e-6, 1e-9}) {
            auto plan = FgtPlan::build(delta, eps, 8);
            CHECK(plan.plane_wave_error() < eps / 10.0);
        }
}

TEST_CASE("transform of a constant is the constant") {
    auto one = build_adaptive([](double, double, std::span<double> o) { o[0] = 1.0; }, 1, 1e-9, 8, 10);
    // force a few levels so every pipeline branch is exercised
    for (int r = 0; r < 2; ++r)
        for (auto id : one.tree().leaves()) one.subdivide_leaf(id);
    one.sync_storage();
    for (double delta : {1e-4, 1e-2, 0.5}) {
        auto plan = FgtPlan::build(delta, 1e-9, 8);
        auto v = plan.apply(one);
        std::mt19937 rng(4);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (int t = 0; t < 100; ++t)
            CHECK(std::fabs(v.eval1(u(rng), u(rng)) - 1.0) < 1e-8);
    }
}

TEST_CASE("cosine modes are eigenfunctions with the heat multiplier") {
    // exp(-pi^2 delta |n|^2) is the Eq. dual-form multiplier with delta = 4 D t
    for (double delta : {1e-3, 1e-2}) {
        auto plan = FgtPlan::build(delta, 1e-9, 8);
        for (int n : {1, 3}) {
            auto src = build_adaptive([n](double x, double y, std::span<double> o) {
                o[0] = std::cos(kTwoPi * (n * x + n * y));
            }, 1, 1e-9, 8, 10);
            auto v = plan.apply(src);
            double mult = std::exp(-kPi * kPi * delta * 2.0 * n * n);
            std::mt19937 rng(n);
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            for (int t = 0; t < 60; ++t) {
                double x = u(rng), y = u(rng);
                double expect = mult * std::cos(kTwoPi * (n * x + n * y));
                CHECK(std::fabs(v.eval1(x, y) - expect) < 1e-8);
            }
        }
    }
}

TEST_CASE("random resolved fields match the direct transform oracle") {
    auto pts = random_points(120, 7);
    int seed = 40;
    for (double delta : {1e-4, 1e-3, 1e-2}) {
        for (double eps : {1e-6, 1e-9}) {
            auto src = random_band_limited(seed++, eps);
            double scale = src.max_abs(0);
            auto plan = FgtPlan::build(delta, eps, 8);
            auto got = plan.apply(src);
            auto ref = oracles::direct_gauss_transform(src, delta, pts);
            double worst = 0.0;
            for (std::size_t k = 0; k < pts.size(); ++k)
                worst = std::max(worst, std::fabs(got.eval1(pts[k].x, pts[k].y) - ref[k]));
            CAPTURE(delta);
            CAPTURE(eps);
            CHECK(worst <= 5.0 * eps * scale);
        }
    }
}

TEST_CASE("spectral-mode plans match the oracle too") {
    auto src = random_band_limited(99, 1e-9);
    double scale = src.max_abs(0);
    auto pts = random_points(60, 3);
    auto plan = FgtPlan::build(0.3, 1e-9, 8);
    REQUIRE(plan.spectral());
    auto got = plan.apply(src);
    auto ref = oracles::direct_gauss_transform(src, 0.3, pts);
    for (std::size_t k = 0; k < pts.size(); ++k)
        CHECK(std::fabs(got.eval1(pts[k].x, pts[k].y) - ref[k]) <= 5e-9 * scale);
}

TEST_CASE("mass is conserved across the pipeline") {
    auto src = random_band_limited(11, 1e-9);
    double m0 = src.mean(0);
    for (double delta : {1e-4, 1e-2, 0.2}) {
        auto plan = FgtPlan::build(delta, 1e-9, 8);
        auto v = plan.apply(src);
        CHECK(v.mean(0) == doctest::Approx(m0).epsilon(1e-8));
    }
}

TEST_CASE("multiplier identity holds for |n| <= 8 with delta spanning decades") {
    // property sweep at 1e-9, spectral mode included
    for (double delta : {1e-4, 1e-2, 1.0}) {
        auto plan = FgtPlan::build(delta, 1e-9, 8);
        for (int n : {1, 4, 8}) {
            auto src = build_adaptive([n](double x, double, std::span<double> o) {
                o[0] = std::cos(kTwoPi * n * x);
            }, 1, 1e-9, 8, 10);
            auto v = plan.apply(src);
            double mult = std::exp(-kPi * kPi * delta * n * n);
            double worst = 0.0;
            std::mt19937 rng(n + 17);
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            for (int t = 0; t < 100; ++t) {
                double x = u(rng), y = u(rng);
                worst = std::max(worst,
                                 std::fabs(v.eval1(x, y) - mult * std::cos(kTwoPi * n * x)));
            }
            CAPTURE(delta);
            CAPTURE(n);
            CHECK(worst < 1e-8);
        }
    }
}

TEST_CASE("semigroup: two short transforms equal one long transform") {
    auto src = random_band_limited(23, 1e-9);
    double scale = src.max_abs(0);
    double d1 = 2e-3, d2 = 3e-3;
    auto p1 = FgtPlan::build(d1, 1e-9, 8);
    auto p2 = FgtPlan::build(d2, 1e-9, 8);
    auto p12 = FgtPlan::build(d1 + d2, 1e-9, 8);
    auto two = p2.apply(p1.apply(src));
    auto one = p12.apply(src);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 200; ++t) {
        double x = u(rng), y = u(rng);
        CHECK(std::fabs(two.eval1(x, y) - one.eval1(x, y)) < 1e-8 * std::max(1.0, scale));
    }
}

TEST_CASE("translation equivariance") {
    double ax = 0.125, ay = -0.25; // dyadic shifts keep trees compatible
    auto f0 = [](double x, double y) {
        return std::exp(-periodic_dist2({x, y}, {0.05, -0.1}) / 4e-2);
    };
    auto src = build_adaptive([&](double x, double y, std::span<double> o) { o[0] = f0(x, y); },
                              1, 1e-9, 8, 10);
    auto shifted = build_adaptive([&](double x, double y, std::span<double> o) {
        o[0] = f0(x - ax, y - ay);
    }, 1, 1e-9, 8, 10);
    auto plan = FgtPlan::build(2e-3, 1e-9, 8);
    auto v = plan.apply(src);
    auto vs = plan.apply(shifted);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 200; ++t) {
        double x = u(rng), y = u(rng);
        CHECK(std::fabs(vs.eval1(x, y) - v.eval1(x - ax, y - ay)) < 1e-8);
    }
}

TEST_CASE("adaptive output resolves the diffused field of a sharp Gaussian") {
    // free-space identity: e^{-r^2/w} * G_delta = w/(w+delta) e^{-r^2/(w+delta)},
    // periodized on both sides.
    double w = 1e-3, delta = 4e-3;
    Vec2 c{0.1, -0.05};
    auto src = build_adaptive([&](double x, double y, std::span<double> o) {
        double s = 0.0;
        for (int iy = -1; iy <= 1; ++iy)
            for (int ix = -1; ix <= 1; ++ix) {
                double dx = x - c.x - ix, dy = y - c.y - iy;
                s += std::exp(-(dx * dx + dy * dy) / w);
            }
        o[0] = s;
    }, 1, 1e-9, 8, 12);
    auto plan = FgtPlan::build(delta, 1e-9, 8);
    auto v = plan.apply_adaptive(src, 1e-9);
    CHECK(v.tree().is_balanced_bruteforce());
    double wd = w + delta;
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 400; ++t) {
        double x = u(rng), y = u(rng);
        double expect = 0.0;
        for (int iy = -1; iy <= 1; ++iy)
            for (int ix = -1; ix <= 1; ++ix) {
                double dx = x - c.x - ix, dy = y - c.y - iy;
                expect += (w / wd) * std::exp(-(dx * dx + dy * dy) / wd);
            }
        CHECK(std::fabs(v.eval1(x, y) - expect) < 1e-7);
    }
}

TEST_CASE("adaptive output tree of a constant collapses toward the root") {
    auto one = build_adaptive([](double, double, std::span<double> o) { o[0] = 1.0; }, 1, 1e-9, 8, 10);
    for (int r = 0; r < 3; ++r)
        for (auto id : one.tree().leaves()) one.subdivide_leaf(id);
    one.sync_storage();
    REQUIRE(one.tree().leaf_count() == 64);
    auto plan = FgtPlan::build(1e-3, 1e-9, 8);
    auto v = plan.apply_adaptive(one, 1e-9);
    CHECK(v.tree().leaf_count() <= 4);
}

TEST_CASE("Gauss transform of two sharp peaks re-adapts the output grid") {
    // the two-Gaussian configuration with delta = 4e-3 diffusion
    double w = 2.5e-4;
    auto f = [&](double x, double y, std::span<double> o) {
        o[0] = std::exp(-periodic_dist2({x, y}, {-0.2, -0.2}) / w) +
               std::exp(-periodic_dist2({x, y}, {0.2, 0.2}) / w);
    };
    auto src = build_adaptive(f, 1, 1e-9, 8, 12);
    auto plan = FgtPlan::build(4e-3, 1e-9, 8);
    auto v = plan.apply_adaptive(src, 1e-9);
    CHECK(v.tree().is_balanced_bruteforce());
    // output grid differs from the input grid but box count is comparable
    CHECK(v.tree().leaf_count() != src.tree().leaf_count());
    CHECK(v.tree().leaf_count() < 2 * src.tree().leaf_count());
    CHECK(v.tree().leaf_count() > src.tree().leaf_count() / 4);
    // output is everywhere resolved
    CHECK(v.max_tail_error() <= 1e-9 * 1.01);
}
