#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "heatpot/errors.hpp"
#include "heatpot/helmholtz.hpp"
#include "heatpot/numutil.hpp"
#include "heatpot/oracles.hpp"

using namespace heatpot;

namespace {

TreeField band_limited_vector(int seed, double eps, int modes) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    struct Mode {
        int nx, ny;
        double a0, b0, a1, b1;
    };
    std::vector<Mode> ms;
    for (int nx = 0; nx <= modes; ++nx)
        for (int ny = -modes; ny <= modes; ++ny)
            if (nx != 0 || ny != 0) ms.push_back({nx, ny, u(rng), u(rng), u(rng), u(rng)});
    auto f = [ms](double x, double y, std::span<double> out) {
        out[0] = out[1] = 0.0;
        for (const auto& m : ms) {
            double c = std::cos(kTwoPi * (m.nx * x + m.ny * y));
            double s = std::sin(kTwoPi * (m.nx * x + m.ny * y));
            out[0] += m.a0 * c + m.b0 * s;
            out[1] += m.a1 * c + m.b1 * s;
        }
    };
    return build_adaptive(f, 2, eps, 8, 10);
}

} // namespace

TEST_CASE("poisson recovers the Laplacian eigenfunction") {
    auto rhs = build_adaptive([](double x, double y, std::span<double> o) {
        o[0] = -8.0 * kPi * kPi * std::sin(kTwoPi * x) * std::sin(kTwoPi * y);
    }, 1, 1e-9, 8, 10);
    auto sol = poisson_solve_periodic(rhs, 1e-9);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 200; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> v(3);
        sol.eval(x, y, v);
        CHECK(std::fabs(v[0] - std::sin(kTwoPi * x) * std::sin(kTwoPi * y)) < 1e-8);
        CHECK(std::fabs(v[1] - kTwoPi * std::cos(kTwoPi * x) * std::sin(kTwoPi * y)) < 1e-7);
        CHECK(std::fabs(v[2] - kTwoPi * std::sin(kTwoPi * x) * std::cos(kTwoPi * y)) < 1e-7);
    }
}

TEST_CASE("poisson of zero is zero and nonzero mean is rejected") {
    auto zero = build_adaptive([](double, double, std::span<double> o) { o[0] = 0.0; }, 1, 1e-9, 8, 10);
    auto sol = poisson_solve_periodic(zero, 1e-9);
    CHECK(std::fabs(sol.eval1(0.2, -0.3, 0)) < 1e-13);

    auto biased = build_adaptive([](double x, double, std::span<double> o) {
        o[0] = 0.5 + std::cos(kTwoPi * x);
    }, 1, 1e-9, 8, 10);
    CHECK_THROWS_AS((void)poisson_solve_periodic(biased, 1e-9), Error);
}

TEST_CASE("poisson matches the naive spectral oracle on band-limited rhs") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    struct Mode {
        int nx, ny;
        double a, b;
    };
    std::vector<Mode> ms;
    for (int nx = 0; nx <= 4; ++nx)
        for (int ny = -4; ny <= 4; ++ny)
            if (nx != 0 || ny != 0) ms.push_back({nx, ny, u(rng), u(rng)});
    auto fr = [&](double x, double y) {
        double s = 0.0;
        for (const auto& m : ms)
            s += m.a * std::cos(kTwoPi * (m.nx * x + m.ny * y)) +
                 m.b * std::sin(kTwoPi * (m.nx * x + m.ny * y));
        return s;
    };
    auto rhs = build_adaptive([&](double x, double y, std::span<double> o) { o[0] = fr(x, y); },
                              1, 1e-9, 8, 10);
    auto sol = poisson_solve_periodic(rhs, 1e-9);

    const int M = 64;
    auto grid = oracles::sample_uniform(fr, M);
    auto ref = oracles::spectral_poisson(grid);
    double scale = rhs.max_abs(0);
    for (int j = 0; j < M; j += 3)
        for (int i = 0; i < M; i += 3) {
            double x = ref.potential.x(i), y = ref.potential.y(j);
            std::vector<double> v(3);
            sol.eval(x, y, v);
            CHECK(std::fabs(v[0] - ref.potential.at(i, j)) < 1e-8 * scale);
            CHECK(std::fabs(v[1] - ref.grad_x.at(i, j)) < 1e-8 * scale);
            CHECK(std::fabs(v[2] - ref.grad_y.at(i, j)) < 1e-8 * scale);
        }
}

TEST_CASE("divergence-free fields pass through the decomposition") {
    // F = (psi_y, -psi_x), psi = sin(2 pi x) sin(2 pi y)
    auto F = build_adaptive([](double x, double y, std::span<double> o) {
        o[0] = kTwoPi * std::sin(kTwoPi * x) * std::cos(kTwoPi * y);
        o[1] = -kTwoPi * std::cos(kTwoPi * x) * std::sin(kTwoPi * y);
    }, 2, 1e-9, 8, 10);
    auto dec = helmholtz_decompose(F, 1e-9);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    double scale = std::max(F.max_abs(0), F.max_abs(1));
    for (int t = 0; t < 150; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> fs(2), fg(2), f(2);
        dec.solenoidal.eval(x, y, fs);
        dec.gradient.eval(x, y, fg);
        F.eval(x, y, f);
        CHECK(std::fabs(fg[0]) < 1e-8 * scale);
        CHECK(std::fabs(fg[1]) < 1e-8 * scale);
        CHECK(std::fabs(fs[0] - f[0]) < 1e-8 * scale);
        CHECK(std::fabs(fs[1] - f[1]) < 1e-8 * scale);
    }
}

TEST_CASE("pure gradients are recovered as gradients") {
    // F = grad(cos(2 pi y)) = (0, -2 pi sin(2 pi y))
    auto F = build_adaptive([](double, double y, std::span<double> o) {
        o[0] = 0.0;
        o[1] = -kTwoPi * std::sin(kTwoPi * y);
    }, 2, 1e-9, 8, 10);
    auto dec = helmholtz_decompose(F, 1e-9);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 150; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> fs(2), fg(2);
        dec.solenoidal.eval(x, y, fs);
        dec.gradient.eval(x, y, fg);
        CHECK(std::fabs(fs[0]) < 1e-7);
        CHECK(std::fabs(fs[1]) < 1e-7);
        CHECK(std::fabs(fg[1] + kTwoPi * std::sin(kTwoPi * y)) < 1e-7);
    }
}

TEST_CASE("decomposition matches the Fourier projection oracle") {
    auto F = band_limited_vector(77, 1e-9, 3);
    auto dec = helmholtz_decompose(F, 1e-9);
    double scale = std::max(F.max_abs(0), F.max_abs(1));

    // oracle: project modes with (I - n n^T/|n|^2) on a uniform grid
    const int M = 64;
    auto g0 = oracles::sample_uniform([&](double x, double y) { return F.eval1(x, y, 0); }, M);
    auto g1 = oracles::sample_uniform([&](double x, double y) { return F.eval1(x, y, 1); }, M);
    auto m0 = oracles::naive_dft(g0);
    auto m1 = oracles::naive_dft(g1);
    std::vector<std::complex<double>> s0(m0.size()), s1(m1.size());
    for (int k2 = -M / 2; k2 < M / 2; ++k2)
        for (int k1 = -M / 2; k1 < M / 2; ++k1) {
            std::size_t idx = static_cast<std::size_t>(k2 + M / 2) * M + (k1 + M / 2);
            double n2 = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            if (n2 == 0.0) {
                s0[idx] = m0[idx];
                s1[idx] = m1[idx];
                continue;
            }
            auto dot = (m0[idx] * static_cast<double>(k1) + m1[idx] * static_cast<double>(k2)) / n2;
            s0[idx] = m0[idx] - dot * static_cast<double>(k1);
            s1[idx] = m1[idx] - dot * static_cast<double>(k2);
        }
    auto eval_modes = [&](const std::vector<std::complex<double>>& mm, double x, double y) {
        std::complex<double> s = 0.0;
        for (int k2 = -M / 2; k2 < M / 2; ++k2)
            for (int k1 = -M / 2; k1 < M / 2; ++k1)
                s += mm[static_cast<std::size_t>(k2 + M / 2) * M + (k1 + M / 2)] *
                     std::polar(1.0, kTwoPi * (k1 * x + k2 * y));
        return s.real();
    };
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 25; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> fs(2);
        dec.solenoidal.eval(x, y, fs);
        CHECK(std::fabs(fs[0] - eval_modes(s0, x, y)) < 1e-8 * scale);
        CHECK(std::fabs(fs[1] - eval_modes(s1, x, y)) < 1e-8 * scale);
    }
}

TEST_CASE("reconstruction, idempotence, and linearity") {
    auto F = band_limited_vector(13, 1e-9, 2);
    auto dec = helmholtz_decompose(F, 1e-9);
    double scale = std::max(F.max_abs(0), F.max_abs(1));
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int t = 0; t < 500; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> fs(2), fg(2), f(2);
        dec.solenoidal.eval(x, y, fs);
        dec.gradient.eval(x, y, fg);
        F.eval(x, y, f);
        CHECK(std::fabs(fs[0] + fg[0] - f[0]) < 1e-8 * scale);
        CHECK(std::fabs(fs[1] + fg[1] - f[1]) < 1e-8 * scale);
    }

    // idempotence: decomposing F_S again leaves (almost) no gradient part
    auto dec2 = helmholtz_decompose(dec.solenoidal, 1e-9);
    for (int t = 0; t < 100; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> fg(2);
        dec2.gradient.eval(x, y, fg);
        CHECK(std::fabs(fg[0]) < 3e-8 * scale);
        CHECK(std::fabs(fg[1]) < 3e-8 * scale);
    }

    // spectral divergence of F_S on a 64 x 64 sampling
    const int M = 64;
    auto g0 = oracles::sample_uniform([&](double x, double y) { return dec.solenoidal.eval1(x, y, 0); }, M);
    auto g1 = oracles::sample_uniform([&](double x, double y) { return dec.solenoidal.eval1(x, y, 1); }, M);
    auto m0 = oracles::naive_dft(g0);
    auto m1 = oracles::naive_dft(g1);
    double worst = 0.0;
    for (int k2 = -M / 2; k2 < M / 2; ++k2)
        for (int k1 = -M / 2; k1 < M / 2; ++k1) {
            std::size_t idx = static_cast<std::size_t>(k2 + M / 2) * M + (k1 + M / 2);
            worst = std::max(worst, std::abs(m0[idx] * static_cast<double>(k1) +
                                             m1[idx] * static_cast<double>(k2)));
        }
    CHECK(worst < 100.0 * 1e-9 * scale);

    // linearity against a second field
    auto G = band_limited_vector(14, 1e-9, 2);
    auto decG = helmholtz_decompose(G, 1e-9);
    const TreeField* ops[2] = {&F, &G};
    double w[2] = {2.0, -1.5};
    auto H = weighted_sum(ops, w);
    H.set_resolve_eps(1e-9);
    auto decH = helmholtz_decompose(H, 1e-9);
    for (int t = 0; t < 100; ++t) {
        double x = u(rng), y = u(rng);
        std::vector<double> a(2), b(2), c(2);
        decH.solenoidal.eval(x, y, a);
        dec.solenoidal.eval(x, y, b);
        decG.solenoidal.eval(x, y, c);
        CHECK(std::fabs(a[0] - (2.0 * b[0] - 1.5 * c[0])) < 2e-8 * scale);
        CHECK(std::fabs(a[1] - (2.0 * b[1] - 1.5 * c[1])) < 2e-8 * scale);
    }
}
