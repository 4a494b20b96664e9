#include "heatpot/oracles.hpp"

#include <cmath>

#include "heatpot/errors.hpp"
#include "heatpot/numutil.hpp"
#include "heatpot/parallel.hpp"

namespace heatpot::oracles {

UniformGridField sample_uniform(const std::function<double(double, double)>& f, int M) {
    UniformGridField g;
    g.M = M;
    g.ncomp = 1;
    g.data.resize(static_cast<std::size_t>(M) * M);
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) g.at(i, j) = f(g.x(i), g.y(j));
    return g;
}

namespace {

// 1D moments int T_n(t) exp(-beta (u - t)^2) dt for n < K, by composite
// Gauss-Legendre over the clipped Gaussian support (machine accurate for
// any beta; independent of the plan tables).
void line_moments(int K, double beta, double u, double* out) {
    for (int n = 0; n < K; ++n) out[n] = 0.0;
    double support = 10.0 / std::sqrt(beta);
    double lo = std::max(-1.0, u - support), hi = std::min(1.0, u + support);
    if (lo >= hi) return;
    const auto& gl = gauss_legendre(16);
    const int panels = 8;
    std::vector<double> T(K);
    for (int p = 0; p < panels; ++p) {
        double a = lo + (hi - lo) * p / panels, b = lo + (hi - lo) * (p + 1) / panels;
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            double t = mid + half * gl.nodes[q];
            double w = half * gl.weights[q] * std::exp(-beta * (u - t) * (u - t));
            T[0] = 1.0;
            T[1] = t;
            for (int n = 2; n < K; ++n) T[n] = 2.0 * t * T[n - 1] - T[n - 2];
            for (int n = 0; n < K; ++n) out[n] += w * T[n];
        }
    }
}

} // namespace

std::vector<double> direct_gauss_transform(const TreeField& source, double delta,
                                           const std::vector<Vec2>& targets, int comp) {
    int K = source.order();
    const auto& tree = source.tree();
    auto ids = tree.leaves();

    // image radius: displaced kernels beyond it are < 1e-14
    int img = 1;
    while (std::exp(-(img - 1.0) * (img - 1.0) / delta) > 1e-15 && img < 8) ++img;

    std::vector<double> out(targets.size(), 0.0);
    parallel_for(targets.size(), [&](std::size_t ti) {
        // The x moments depend only on (level, cell column, image shift), so
        // cache them per target across the leaves sharing that column.
        std::unordered_map<std::uint64_t, std::vector<double>> jx_cache, jy_cache;
        auto moments_for = [&](std::unordered_map<std::uint64_t, std::vector<double>>& cache,
                               int level, std::uint32_t cell, int image, double coord,
                               double hs) -> const std::vector<double>& {
            std::uint64_t key = (static_cast<std::uint64_t>(level) << 40) |
                                (static_cast<std::uint64_t>(cell) << 8) |
                                static_cast<std::uint64_t>(image + 8);
            auto it = cache.find(key);
            if (it != cache.end()) return it->second;
            double center = -0.5 + (cell + 0.5) * std::ldexp(1.0, -level);
            double u = (coord - center - image) / hs;
            std::vector<double> m(K);
            line_moments(K, hs * hs / delta, u, m.data());
            return cache.emplace(key, std::move(m)).first->second;
        };

        double acc = 0.0;
        for (auto id : ids) {
            const Box& b = tree.node(id).box;
            auto coef = source.coeffs(box_key(b), comp);
            double hs = 0.5 * b.size();
            double beta = hs * hs / delta;
            for (int iy = -img; iy <= img; ++iy)
                for (int ix = -img; ix <= img; ++ix) {
                    double ux = (targets[ti].x - b.cx() - ix) / hs;
                    double uy = (targets[ti].y - b.cy() - iy) / hs;
                    double d2 = 0.0;
                    if (std::fabs(ux) > 1.0) d2 += (std::fabs(ux) - 1.0) * (std::fabs(ux) - 1.0);
                    if (std::fabs(uy) > 1.0) d2 += (std::fabs(uy) - 1.0) * (std::fabs(uy) - 1.0);
                    if (beta * d2 > 42.0) continue; // kernel < 6e-19 over the patch
                    const auto& jx = moments_for(jx_cache, b.level, b.i, ix, targets[ti].x, hs);
                    const auto& jy = moments_for(jy_cache, b.level, b.j, iy, targets[ti].y, hs);
                    double cell = 0.0;
                    for (int m = 0; m < K; ++m) {
                        double s = 0.0;
                        const double* row = coef.data() + m * K;
                        for (int n = 0; n < K; ++n) s += row[n] * jx[n];
                        cell += s * jy[m];
                    }
                    acc += cell * hs * hs;
                }
        }
        out[ti] = acc / (kPi * delta);
    });
    return out;
}

std::vector<std::complex<double>> naive_dft(const UniformGridField& g, int comp) {
    int M = g.M;
    using cd = std::complex<double>;
    // separable: rows then columns, each a direct O(M^2) transform
    std::vector<cd> rows(static_cast<std::size_t>(M) * M);
    for (int j = 0; j < M; ++j)
        for (int k1 = -M / 2; k1 < M / 2; ++k1) {
            cd s = 0.0;
            for (int i = 0; i < M; ++i)
                s += g.at(i, j, comp) * std::polar(1.0, -kTwoPi * k1 * g.x(i));
            rows[static_cast<std::size_t>(j) * M + (k1 + M / 2)] = s;
        }
    std::vector<cd> out(static_cast<std::size_t>(M) * M);
    for (int k2 = -M / 2; k2 < M / 2; ++k2)
        for (int k1 = 0; k1 < M; ++k1) {
            cd s = 0.0;
            for (int j = 0; j < M; ++j)
                s += rows[static_cast<std::size_t>(j) * M + k1] * std::polar(1.0, -kTwoPi * k2 * g.y(j));
            out[static_cast<std::size_t>(k2 + M / 2) * M + k1] = s / static_cast<double>(M * M);
        }
    return out;
}

namespace {

UniformGridField synth(const std::vector<std::complex<double>>& modes, int M) {
    UniformGridField g;
    g.M = M;
    g.ncomp = 1;
    g.data.assign(static_cast<std::size_t>(M) * M, 0.0);
    using cd = std::complex<double>;
    std::vector<cd> rows(static_cast<std::size_t>(M) * M, 0.0);
    for (int j = 0; j < M; ++j)
        for (int k1 = 0; k1 < M; ++k1) {
            cd s = 0.0;
            for (int k2 = -M / 2; k2 < M / 2; ++k2)
                s += modes[static_cast<std::size_t>(k2 + M / 2) * M + k1] *
                     std::polar(1.0, kTwoPi * k2 * g.y(j));
            rows[static_cast<std::size_t>(j) * M + k1] = s;
        }
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) {
            cd s = 0.0;
            for (int k1 = -M / 2; k1 < M / 2; ++k1)
                s += rows[static_cast<std::size_t>(j) * M + (k1 + M / 2)] *
                     std::polar(1.0, kTwoPi * k1 * g.x(i));
            g.at(i, j) = s.real();
        }
    return g;
}

} // namespace

SpectralPoisson spectral_poisson(const UniformGridField& rhs) {
    int M = rhs.M;
    double scale = 0.0;
    for (double v : rhs.data) scale = std::max(scale, std::fabs(v));
    auto modes = naive_dft(rhs);
    double mean = modes[static_cast<std::size_t>(M / 2) * M + M / 2].real();
    if (std::fabs(mean) > 1e-10 * std::max(scale, 1e-300))
        throw Error("spectral_poisson: rhs mean is not zero");

    using cd = std::complex<double>;
    std::vector<cd> phi(modes.size()), gx(modes.size()), gy(modes.size());
    for (int k2 = -M / 2; k2 < M / 2; ++k2)
        for (int k1 = -M / 2; k1 < M / 2; ++k1) {
            std::size_t idx = static_cast<std::size_t>(k2 + M / 2) * M + (k1 + M / 2);
            double n2 = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            if (n2 == 0.0) {
                phi[idx] = gx[idx] = gy[idx] = 0.0;
                continue;
            }
            cd p = modes[idx] * (-1.0 / (4.0 * kPi * kPi * n2));
            phi[idx] = p;
            gx[idx] = cd(0.0, kTwoPi * k1) * p;
            gy[idx] = cd(0.0, kTwoPi * k2) * p;
        }
    SpectralPoisson out;
    out.potential = synth(phi, M);
    out.grad_x = synth(gx, M);
    out.grad_y = synth(gy, M);
    return out;
}

UniformGridField duhamel_dense(const std::function<double(double, double, double)>& forcing,
                               const UniformGridField& u0, double D, double t_final,
                               int n_quad) {
    int M = u0.M;
    auto modes = naive_dft(u0);
    using cd = std::complex<double>;
    std::vector<cd> acc(modes.size());
    for (int k2 = -M / 2; k2 < M / 2; ++k2)
        for (int k1 = -M / 2; k1 < M / 2; ++k1) {
            std::size_t idx = static_cast<std::size_t>(k2 + M / 2) * M + (k1 + M / 2);
            double lam = 4.0 * kPi * kPi * (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2) * D;
            acc[idx] = modes[idx] * std::exp(-lam * t_final);
        }

    // Panels refined geometrically toward t_final resolve every mode's
    // boundary layer exp(-lambda (t - tau)).
    std::vector<std::pair<double, double>> panels;
    double lo = 0.0, hi = t_final;
    while (hi - lo > 1e-11 * t_final && panels.size() < 60) {
        double mid = hi - 0.5 * (hi - lo);
        panels.emplace_back(lo, mid);
        lo = mid;
    }
    panels.emplace_back(lo, t_final);

    const auto& gl = gauss_legendre(n_quad);
    for (auto [a, b] : panels) {
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            double tau = mid + half * gl.nodes[q];
            double w = half * gl.weights[q];
            auto f = sample_uniform([&](double x, double y) { return forcing(x, y, tau); }, M);
            auto fm = naive_dft(f);
            for (int k2 = -M / 2; k2 < M / 2; ++k2)
                for (int k1 = -M / 2; k1 < M / 2; ++k1) {
                    std::size_t idx = static_cast<std::size_t>(k2 + M / 2) * M + (k1 + M / 2);
                    double lam = 4.0 * kPi * kPi *
                                 (static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2) * D;
                    acc[idx] += w * std::exp(-lam * (t_final - tau)) * fm[idx];
                }
        }
    }
    return synth(acc, M);
}

} // namespace heatpot::oracles
