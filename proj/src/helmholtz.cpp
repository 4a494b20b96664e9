#include "heatpot/helmholtz.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <unordered_map>

#include "heatpot/errors.hpp"
#include "heatpot/fft.hpp"
#include "heatpot/numutil.hpp"
#include "heatpot/parallel.hpp"

namespace heatpot {

namespace {

using cplx = std::complex<double>;

int choose_grid(const TreeField& f, int cap) {
    int M = f.order() * (1 << f.tree().max_depth());
    int m = 8;
    while (m < M && m < cap) m *= 2;
    return std::min(m, cap);
}

int wrap_freq(int idx, int M) { return idx <= M / 2 ? idx : idx - M; }

} // namespace

TreeField poisson_solve_periodic(const TreeField& rhs, double eps, int grid_cap) {
    if (rhs.ncomp() != 1) throw Error("poisson: scalar rhs expected");
    double scale = rhs.max_abs(0);
    double mean = rhs.mean(0);
    if (std::fabs(mean) > 10.0 * eps * std::max(scale, 1e-300))
        throw Error("poisson: rhs mean " + std::to_string(mean) + " violates periodic solvability");

    int M = choose_grid(rhs, grid_cap);
    std::vector<cplx> modes(static_cast<std::size_t>(M) * M);
    {
        std::vector<double> samples(static_cast<std::size_t>(M) * M);
        parallel_for(static_cast<std::size_t>(M), [&](std::size_t j) {
            double y = -0.5 + static_cast<double>(j) / M;
            for (int i = 0; i < M; ++i)
                samples[j * M + i] = rhs.eval1(-0.5 + static_cast<double>(i) / M, y);
        });
        for (std::size_t k = 0; k < modes.size(); ++k) modes[k] = samples[k];
    }
    fft2_inplace(modes, M, -1);
    double norm = 1.0 / (static_cast<double>(M) * M);

    // phi multiplier; mean mode dropped (mean-zero potential). The samples
    // start at x = -1/2, so the index-space DFT picks up a (-1)^{k1+k2}
    // parity factor relative to true Fourier coefficients.
    std::vector<cplx> phi_hat(modes.size());
    for (int j = 0; j < M; ++j) {
        int k2 = wrap_freq(j, M);
        for (int i = 0; i < M; ++i) {
            int k1 = wrap_freq(i, M);
            double n2 = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
            double parity = ((k1 + k2) & 1) ? -1.0 : 1.0;
            phi_hat[static_cast<std::size_t>(j) * M + i] =
                n2 == 0.0 ? cplx(0.0, 0.0)
                          : modes[static_cast<std::size_t>(j) * M + i] * (norm * parity) *
                                (-1.0 / (4.0 * kPi * kPi * n2));
        }
    }

    // significant mode band (resolved fields decay fast)
    int ksig = 1;
    {
        double top = 0.0;
        for (auto& v : phi_hat) top = std::max(top, std::abs(v));
        double thr = top * 1e-17;
        for (int j = 0; j < M; ++j)
            for (int i = 0; i < M; ++i)
                if (std::abs(phi_hat[static_cast<std::size_t>(j) * M + i]) > thr)
                    ksig = std::max({ksig, std::abs(wrap_freq(i, M)), std::abs(wrap_freq(j, M))});
        ksig = std::min(ksig, M / 2);
    }

    // distinct node coordinates per axis (same set for x and y by symmetry
    // of the node layout, but collect separately for clarity)
    const auto& nodes = cheb_engine(rhs.order()).nodes;
    int K = rhs.order();
    auto ids = rhs.tree().leaves();
    std::unordered_map<std::int64_t, int> xindex;
    std::vector<double> xcoords;
    auto coord_id = [&](const Box& b, int a) {
        // exact key: (level, cell index, node index)
        return (static_cast<std::int64_t>(b.level) << 40) |
               (static_cast<std::int64_t>(b.i) << 8) | a;
    };
    for (auto id : ids) {
        const Box& b = rhs.tree().node(id).box;
        for (int a = 0; a < K; ++a) {
            auto keyx = coord_id(b, a);
            if (!xindex.count(keyx)) {
                xindex[keyx] = static_cast<int>(xcoords.size());
                xcoords.push_back(b.cx() + 0.5 * b.size() * nodes[a]);
            }
        }
    }

    // stage 1: partial sums over k1 for phi and phi_x at every distinct coordinate
    int nb = 2 * ksig + 1;
    std::size_t U = xcoords.size();
    std::vector<cplx> g_phi(U * nb), g_phix(U * nb);
    parallel_for(U, [&](std::size_t u) {
        double x = xcoords[u];
        for (int j2 = -ksig; j2 <= ksig; ++j2) {
            int jdx = (j2 + M) % M;
            cplx sp = 0.0, sx = 0.0;
            for (int k1 = -ksig; k1 <= ksig; ++k1) {
                int idx = (k1 + M) % M;
                cplx ph = phi_hat[static_cast<std::size_t>(jdx) * M + idx] *
                          std::polar(1.0, kTwoPi * k1 * x);
                sp += ph;
                sx += cplx(0.0, kTwoPi * k1) * ph;
            }
            g_phi[u * nb + (j2 + ksig)] = sp;
            g_phix[u * nb + (j2 + ksig)] = sx;
        }
    });

    // stage 2: assemble (phi, phi_x, phi_y) at the tensor nodes of each leaf
    TreeField out(rhs.tree(), 3, K);
    out.set_time(rhs.time());
    out.set_resolve_eps(eps);
    const auto& e = cheb_engine(K);
    parallel_for(ids.size(), [&](std::size_t li) {
        const Box& b = rhs.tree().node(ids[li]).box;
        Box by{b.level, b.j, 0};
        std::vector<double> vp(K * K), vx(K * K), vy(K * K);
        for (int bb = 0; bb < K; ++bb) {
            double y = by.cx() + 0.5 * b.size() * nodes[bb];
            std::vector<cplx> ph_y(nb);
            for (int j2 = -ksig; j2 <= ksig; ++j2)
                ph_y[j2 + ksig] = std::polar(1.0, kTwoPi * j2 * y);
            for (int aa = 0; aa < K; ++aa) {
                int u = xindex.at(coord_id(b, aa));
                cplx sp = 0.0, sx = 0.0, sy = 0.0;
                for (int j2 = 0; j2 < nb; ++j2) {
                    cplx py = ph_y[j2];
                    sp += g_phi[static_cast<std::size_t>(u) * nb + j2] * py;
                    sx += g_phix[static_cast<std::size_t>(u) * nb + j2] * py;
                    sy += g_phi[static_cast<std::size_t>(u) * nb + j2] * py *
                          cplx(0.0, kTwoPi * (j2 - ksig));
                }
                vp[bb * K + aa] = sp.real();
                vx[bb * K + aa] = sx.real();
                vy[bb * K + aa] = sy.real();
            }
        }
        auto key = box_key(b);
        e.values_to_coeffs(vp.data(), out.coeffs(key, 0).data());
        e.values_to_coeffs(vx.data(), out.coeffs(key, 1).data());
        e.values_to_coeffs(vy.data(), out.coeffs(key, 2).data());
    });
    return out;
}

Decomposition helmholtz_decompose(const TreeField& F, double eps, int grid_cap) {
    if (F.ncomp() != 2) throw Error("helmholtz_decompose: 2-component field expected");
    TreeField div(F.tree(), 1, F.order());
    div.set_time(F.time());
    for (auto id : F.tree().leaves()) {
        auto key = box_key(F.tree().node(id).box);
        auto dx = diff(F.patch(key, 0), 0);
        auto dy = diff(F.patch(key, 1), 1);
        auto dst = div.coeffs(key, 0);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = dx.coef[k] + dy.coef[k];
    }
    div.set_resolve_eps(F.resolve_eps());
    // div of a periodic field integrates to zero; the per-leaf derivative
    // noise leaves a spurious mean behind, so remove it before the solve
    double mean = div.mean(0);
    for (auto id : F.tree().leaves())
        div.coeffs(box_key(F.tree().node(id).box), 0)[0] -= mean;

    auto solved = poisson_solve_periodic(div, eps, grid_cap);

    Decomposition out{TreeField(F.tree(), 2, F.order()), TreeField(F.tree(), 2, F.order()),
                      solved.component(0)};
    out.solenoidal.set_time(F.time());
    out.gradient.set_time(F.time());
    out.solenoidal.set_resolve_eps(eps);
    out.gradient.set_resolve_eps(eps);
    for (auto id : F.tree().leaves()) {
        auto key = box_key(F.tree().node(id).box);
        for (int c = 0; c < 2; ++c) {
            auto g = solved.coeffs(key, c + 1);
            auto fg = out.gradient.coeffs(key, c);
            auto fs = out.solenoidal.coeffs(key, c);
            auto f = F.coeffs(key, c);
            for (std::size_t k = 0; k < g.size(); ++k) {
                fg[k] = g[k];
                fs[k] = f[k] - g[k];
            }
        }
    }
    return out;
}

} // namespace heatpot
