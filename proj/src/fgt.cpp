#include "heatpot/fgt.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include "heatpot/errors.hpp"
#include "heatpot/numutil.hpp"
#include "heatpot/parallel.hpp"

namespace heatpot {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// periodic heat kernel
// ---------------------------------------------------------------------------

double heat_kernel_1d(double x, double dt, KernelBranch branch) {
    if (dt <= 0.0) throw Error("heat_kernel: tau must be positive");
    bool images = branch == KernelBranch::Images ||
                  (branch == KernelBranch::Auto && dt < 0.025);
    double xw = wrap_unit(x);
    // truncation driven by the term envelope, not the (possibly zero) term
    if (images) {
        double inv = 1.0 / (4.0 * dt);
        double norm = 1.0 / std::sqrt(4.0 * kPi * dt);
        double s = 0.0;
        for (int n = 0;; ++n) {
            double term = std::exp(-(xw - n) * (xw - n) * inv);
            if (n > 0) term += std::exp(-(xw + n) * (xw + n) * inv);
            s += term;
            if (n > 0 && std::exp(-(n - 0.5) * (n - 0.5) * inv) < 1e-16) break;
        }
        return norm * s;
    }
    double s = 1.0;
    for (int n = 1;; ++n) {
        double envelope = 2.0 * std::exp(-4.0 * kPi * kPi * n * n * dt);
        s += envelope * std::cos(kTwoPi * n * xw);
        if (envelope < 1e-16) break;
    }
    return s;
}

double heat_kernel(double x, double y, double tau, double D, KernelBranch branch) {
    if (tau <= 0.0) throw Error("heat_kernel: tau must be positive");
    double dt = D * tau;
    return heat_kernel_1d(x, dt, branch) * heat_kernel_1d(y, dt, branch);
}

// ---------------------------------------------------------------------------
// plan construction
// ---------------------------------------------------------------------------

namespace {

constexpr int kMaxTableLevel = 18;

double table_guess(double eps) {
    // Starting guess for the per-dimension plane-wave count; the verification
    // sweep below is what actually enforces correctness.
    double d = -std::log10(eps); // 3..12
    return 12.0 + 8.0 * (d - 3.0) / 3.0;
}

// int_{-1}^{1} T_n(t) e^{-i w t} dt for n < K, by composite Gauss-Legendre.
void oscillatory_moments(double w, int K, cplx* out) {
    int panels = 2 + static_cast<int>(std::fabs(w) / 8.0);
    const auto& gl = gauss_legendre(24);
    for (int n = 0; n < K; ++n) out[n] = 0.0;
    std::vector<double> T(K);
    for (int p = 0; p < panels; ++p) {
        double a = -1.0 + 2.0 * p / panels, b = -1.0 + 2.0 * (p + 1) / panels;
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            double t = mid + half * gl.nodes[q];
            double wq = half * gl.weights[q];
            cplx ph = std::polar(wq, -w * t);
            T[0] = 1.0;
            T[1] = t;
            for (int n = 2; n < K; ++n) T[n] = 2.0 * t * T[n - 1] - T[n - 2];
            for (int n = 0; n < K; ++n) out[n] += ph * T[n];
        }
    }
}

} // namespace

void FgtPlan::build_quadrature(int M) {
    P_ = 2 * M + 1;
    knodes_.resize(P_);
    w1d_.resize(P_);
    wfold_.resize(P_);
    double c = std::sqrt(delta_ / (4.0 * kPi)) * hk_;
    double cf = 1.0 / std::sqrt(kPi * delta_);
    for (int j = 0; j < P_; ++j) {
        double k = (j - M) * hk_;
        knodes_[j] = k;
        w1d_[j] = c * std::exp(-delta_ * k * k / 4.0);
        wfold_[j] = w1d_[j] * cf;
    }
}

double FgtPlan::verify_1d() const {
    double xmax = 2.0 * std::ldexp(1.0, -l_cut_);
    double worst = 0.0;
    for (int s = 0; s <= 1000; ++s) {
        double x = xmax * s / 1000.0;
        double pw = 0.0;
        for (int j = 0; j < P_; ++j) pw += w1d_[j] * std::cos(knodes_[j] * x);
        worst = std::max(worst, std::fabs(pw - std::exp(-x * x / delta_)));
    }
    return worst;
}

void FgtPlan::build_level_tables() {
    max_table_level_ = kMaxTableLevel;
    outgoing_tab_.assign(max_table_level_ + 1, {});
    eval_tab_.assign(max_table_level_ + 1, {});
    const auto& nodes = cheb_engine(K_).nodes;
    std::vector<cplx> mom(K_);
    for (int l = l_cut_; l <= max_table_level_; ++l) {
        double half = 0.5 * std::ldexp(1.0, -l);
        auto& A = outgoing_tab_[l];
        auto& E = eval_tab_[l];
        A.resize(static_cast<std::size_t>(P_) * K_);
        E.resize(static_cast<std::size_t>(P_) * K_);
        for (int j = 0; j < P_; ++j) {
            oscillatory_moments(knodes_[j] * half, K_, mom.data());
            for (int n = 0; n < K_; ++n) A[j * K_ + n] = wfold_[j] * half * mom[n];
            for (int a = 0; a < K_; ++a) E[j * K_ + a] = std::polar(1.0, knodes_[j] * half * nodes[a]);
        }
    }
}

FgtPlan FgtPlan::build(double delta, double eps, int K) {
    if (delta <= 0.0) throw PlanError("fgt: delta must be positive");
    if (eps < 1e-12 || eps > 1e-3) throw PlanError("fgt: eps outside [1e-12, 1e-3]");
    FgtPlan plan;
    plan.delta_ = delta;
    plan.eps_ = eps;
    plan.K_ = K;

    double L = std::log(1.0 / eps);
    if (delta * L >= 1.0) {
        // Kernel wider than the box: exact Fourier synthesis with few modes.
        plan.spectral_ = true;
        plan.n_max_ = static_cast<int>(std::ceil(std::sqrt(L / (kPi * kPi * delta))));
        plan.mode_tab_.assign(kMaxTableLevel + 1, {});
        int N = 2 * plan.n_max_ + 1;
        std::vector<cplx> mom(K);
        for (int l = 0; l <= kMaxTableLevel; ++l) {
            double half = 0.5 * std::ldexp(1.0, -l);
            auto& B = plan.mode_tab_[l];
            B.resize(static_cast<std::size_t>(N) * K);
            for (int ni = 0; ni < N; ++ni) {
                double w = kTwoPi * (ni - plan.n_max_) * half;
                oscillatory_moments(w, K, mom.data());
                for (int n = 0; n < K; ++n) B[ni * K + n] = half * mom[n];
            }
        }
        plan.max_table_level_ = kMaxTableLevel;
        return plan;
    }

    int l_cut = 0;
    while (std::ldexp(1.0, -2 * (l_cut + 1)) >= delta * L && l_cut + 1 < kMaxTableLevel) ++l_cut;
    plan.l_cut_ = l_cut;

    double dcut = std::ldexp(1.0, -l_cut);
    double xmax = 2.0 * dcut;
    double eps_margin = eps * 1e-2;
    double range = xmax + std::sqrt(delta * std::log(1.0 / eps_margin));
    plan.hk_ = kTwoPi / range;
    double kmax = 2.0 * std::sqrt(std::log(1.0 / eps_margin) / delta);
    int M = static_cast<int>(std::ceil(kmax / plan.hk_));
    M = std::max(M, static_cast<int>(std::ceil((table_guess(eps) - 1.0) / 2.0)));

    double target = eps / 10.0;
    for (int attempt = 0;; ++attempt) {
        plan.build_quadrature(M);
        plan.pw_err_ = plan.verify_1d();
        if (plan.pw_err_ < target) break;
        if (attempt >= 6)
            throw PlanError("fgt: plane-wave verification failed at P=" + std::to_string(plan.P_));
        M += std::max(4, M / 4);
    }
    plan.build_level_tables();
    return plan;
}

// ---------------------------------------------------------------------------
// near-field tables (coarse-box direct interactions)
// ---------------------------------------------------------------------------

const std::vector<double>& FgtPlan::near_table(int l_src, int l_tgt, std::int64_t q) const {
    std::uint64_t key = (static_cast<std::uint64_t>(l_src) << 58) |
                        (static_cast<std::uint64_t>(l_tgt) << 52) |
                        static_cast<std::uint64_t>(q + (1ll << 40));
    {
        std::lock_guard<std::mutex> lock(near_->mutex);
        auto it = near_->tables.find(key);
        if (it != near_->tables.end()) return it->second;
    }

    // J[a][n] = (s_src/2) int T_n(t) exp(-beta (u_a - t)^2) dt with u_a the
    // target node in source-scaled coordinates.
    int K = K_;
    double hs = 0.5 * std::ldexp(1.0, -l_src);
    double ht = 0.5 * std::ldexp(1.0, -l_tgt);
    int lmax = std::max(l_src, l_tgt);
    double unit = std::ldexp(1.0, -(lmax + 1));
    double dc = q * unit; // c_tgt - c_src - image
    double beta = hs * hs / delta_;
    double support = 10.0 / std::sqrt(beta); // in t units
    const auto& nodes = cheb_engine(K).nodes;
    const auto& gl = gauss_legendre(20);

    std::vector<double> J(static_cast<std::size_t>(K) * K, 0.0);
    std::vector<double> T(K);
    for (int a = 0; a < K; ++a) {
        double u = (dc + ht * nodes[a]) / hs;
        double lo = std::max(-1.0, u - support), hi = std::min(1.0, u + support);
        if (lo >= hi) continue;
        int panels = 8;
        for (int p = 0; p < panels; ++p) {
            double pa = lo + (hi - lo) * p / panels, pb = lo + (hi - lo) * (p + 1) / panels;
            double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
            for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
                double t = mid + half * gl.nodes[g];
                double wq = half * gl.weights[g] * std::exp(-beta * (u - t) * (u - t));
                T[0] = 1.0;
                T[1] = t;
                for (int n = 2; n < K; ++n) T[n] = 2.0 * t * T[n - 1] - T[n - 2];
                for (int n = 0; n < K; ++n) J[a * K + n] += wq * T[n];
            }
        }
        for (int n = 0; n < K; ++n) J[a * K + n] *= hs;
    }

    std::lock_guard<std::mutex> lock(near_->mutex);
    auto [it, inserted] = near_->tables.emplace(key, std::move(J));
    return it->second;
}

// ---------------------------------------------------------------------------
// transform workspace
// ---------------------------------------------------------------------------

namespace {

struct SourceLeaf {
    Box box;
    const double* coef; // K^2 coefficients of the component being transformed
};

} // namespace

class FgtWorkspace {
public:
    FgtWorkspace(const FgtPlan& plan, const TreeField& src, int comp)
        : plan_(plan), src_(src), comp_(comp) {
        K_ = plan.order();
        for (auto id : src.tree().leaves()) {
            const Box& b = src.tree().node(id).box;
            leaves_.push_back({b, src.coeffs(box_key(b), comp).data()});
        }
        if (plan_.spectral_)
            build_modes();
        else
            build_outgoing();
    }

    /// Transform values at the K x K nodes of an arbitrary box.
    void eval_box(const Box& box, double* out);

private:
    void build_modes();
    void build_outgoing();
    const std::vector<cplx>* incoming(std::int64_t ci, std::int64_t cj);
    void add_direct(const Box& tgt, double* out);
    void direct_rec(std::int32_t node_id, int imx, int imy, double prune2,
                    const Box& tgt, double* out);
    void add_pair(const SourceLeaf& src, int imx, int imy, const Box& tgt, double* out);
    void eval_spectral(const Box& box, double* out);

    const FgtPlan& plan_;
    const TreeField& src_;
    int comp_;
    int K_;
    std::vector<SourceLeaf> leaves_;

    std::vector<cplx> modes_; // spectral mode: (2n_max+1)^2 multiplied coefficients
    std::unordered_map<std::uint64_t, std::vector<cplx>> outgoing_;  // cutoff cells
    std::unordered_map<std::uint64_t, std::vector<cplx>> incoming_;  // memoized
    std::mutex incoming_mutex_;
    static std::uint64_t cell_key(std::uint32_t i, std::uint32_t j) {
        return (static_cast<std::uint64_t>(i) << 32) | j;
    }
};

void FgtWorkspace::build_modes() {
    int nm = plan_.n_max_;
    int N = 2 * nm + 1;
    modes_.assign(static_cast<std::size_t>(N) * N, 0.0);
    std::vector<cplx> tmp(static_cast<std::size_t>(N) * K_);
    for (const auto& lf : leaves_) {
        const auto& B = plan_.mode_tab_[lf.box.level];
        // tmp[ni][m] = sum_n B[ni][n] U[m*K+n]
        for (int ni = 0; ni < N; ++ni)
            for (int m = 0; m < K_; ++m) {
                cplx s = 0.0;
                const cplx* row = &B[static_cast<std::size_t>(ni) * K_];
                const double* u = lf.coef + m * K_;
                for (int n = 0; n < K_; ++n) s += row[n] * u[n];
                tmp[static_cast<std::size_t>(ni) * K_ + m] = s;
            }
        double cx = lf.box.cx(), cy = lf.box.cy();
        for (int nj = 0; nj < N; ++nj) {
            const auto& By = plan_.mode_tab_[lf.box.level];
            for (int ni = 0; ni < N; ++ni) {
                cplx s = 0.0;
                for (int m = 0; m < K_; ++m)
                    s += By[static_cast<std::size_t>(nj) * K_ + m] *
                         tmp[static_cast<std::size_t>(ni) * K_ + m];
                double phase = -kTwoPi * ((ni - nm) * cx + (nj - nm) * cy);
                modes_[static_cast<std::size_t>(nj) * N + ni] += std::polar(1.0, phase) * s;
            }
        }
    }
    // Fourier multiplier of the normalized periodic Gaussian.
    for (int nj = 0; nj < N; ++nj)
        for (int ni = 0; ni < N; ++ni) {
            double n2 = static_cast<double>((ni - nm) * (ni - nm) + (nj - nm) * (nj - nm));
            modes_[static_cast<std::size_t>(nj) * N + ni] *=
                std::exp(-kPi * kPi * plan_.delta_ * n2);
        }
}

void FgtWorkspace::build_outgoing() {
    int P = plan_.P_;
    int lc = plan_.l_cut_;
    const auto& tree = src_.tree();

    // Subtree recursion keeps the peak storage at one expansion per level
    // instead of one per leaf.
    std::function<std::vector<cplx>(std::int32_t)> subtree = [&](std::int32_t id) {
        const auto& nd = tree.node(id);
        if (nd.leaf) {
            const auto& A = plan_.outgoing_tab_[nd.box.level];
            const double* coef = src_.coeffs(box_key(nd.box), comp_).data();
            std::vector<cplx> tmp(static_cast<std::size_t>(P) * K_);
            for (int j = 0; j < P; ++j)
                for (int m = 0; m < K_; ++m) {
                    cplx s = 0.0;
                    const cplx* row = &A[static_cast<std::size_t>(j) * K_];
                    const double* u = coef + m * K_;
                    for (int n = 0; n < K_; ++n) s += row[n] * u[n];
                    tmp[static_cast<std::size_t>(j) * K_ + m] = s;
                }
            std::vector<cplx> O(static_cast<std::size_t>(P) * P);
            for (int j2 = 0; j2 < P; ++j2) {
                const cplx* Ay = &A[static_cast<std::size_t>(j2) * K_];
                for (int j1 = 0; j1 < P; ++j1) {
                    cplx s = 0.0;
                    const cplx* tr = &tmp[static_cast<std::size_t>(j1) * K_];
                    for (int m = 0; m < K_; ++m) s += Ay[m] * tr[m];
                    O[static_cast<std::size_t>(j2) * P + j1] = s;
                }
            }
            return O;
        }
        // merge children about this node's center: e^{-i k (c_child - c_parent)}
        std::vector<cplx> O(static_cast<std::size_t>(P) * P, 0.0);
        double q = std::ldexp(1.0, -nd.box.level - 2); // child offset per axis
        std::vector<cplx> phx(P), phy(P);
        for (int c = 0; c < 4; ++c) {
            auto CO = subtree(nd.child[c]);
            double sx = (c == 1 || c == 3) ? q : -q;
            double sy = (c >= 2) ? q : -q;
            for (int j = 0; j < P; ++j) {
                phx[j] = std::polar(1.0, -plan_.knodes_[j] * sx);
                phy[j] = std::polar(1.0, -plan_.knodes_[j] * sy);
            }
            for (int j2 = 0; j2 < P; ++j2)
                for (int j1 = 0; j1 < P; ++j1)
                    O[static_cast<std::size_t>(j2) * P + j1] +=
                        phy[j2] * phx[j1] * CO[static_cast<std::size_t>(j2) * P + j1];
        }
        return O;
    };

    // One outgoing expansion per populated cutoff cell (tree nodes at l_cut).
    std::function<void(std::int32_t)> walk = [&](std::int32_t id) {
        const auto& nd = tree.node(id);
        if (nd.box.level == lc) {
            outgoing_.emplace(cell_key(nd.box.i, nd.box.j), subtree(id));
            return;
        }
        if (nd.leaf) return; // coarse leaf: handled by the direct channel
        for (int c = 0; c < 4; ++c) walk(nd.child[c]);
    };
    walk(0);
}

const std::vector<cplx>* FgtWorkspace::incoming(std::int64_t ci, std::int64_t cj) {
    int lc = plan_.l_cut_;
    std::int64_t n = 1ll << lc;
    std::int64_t iw = ((ci % n) + n) % n;
    std::int64_t jw = ((cj % n) + n) % n;
    auto key = cell_key(static_cast<std::uint32_t>(iw), static_cast<std::uint32_t>(jw));
    {
        std::lock_guard<std::mutex> lock(incoming_mutex_);
        auto it = incoming_.find(key);
        if (it != incoming_.end()) return it->second.empty() ? nullptr : &it->second;
    }

    int P = plan_.P_;
    double dcut = std::ldexp(1.0, -lc);
    std::vector<cplx> C;
    std::vector<cplx> phx(P), phy(P);
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            std::int64_t si = ((iw + di) % n + n) % n;
            std::int64_t sj = ((jw + dj) % n + n) % n;
            auto oit = outgoing_.find(cell_key(static_cast<std::uint32_t>(si),
                                               static_cast<std::uint32_t>(sj)));
            if (oit == outgoing_.end()) continue;
            if (C.empty()) C.assign(static_cast<std::size_t>(P) * P, 0.0);
            // source image displaced by (di, dj) cells: e^{i k (c_tgt - c_src)}
            for (int j = 0; j < P; ++j) {
                phx[j] = std::polar(1.0, -plan_.knodes_[j] * di * dcut);
                phy[j] = std::polar(1.0, -plan_.knodes_[j] * dj * dcut);
            }
            const auto& O = oit->second;
            for (int j2 = 0; j2 < P; ++j2)
                for (int j1 = 0; j1 < P; ++j1)
                    C[static_cast<std::size_t>(j2) * P + j1] +=
                        phy[j2] * phx[j1] * O[static_cast<std::size_t>(j2) * P + j1];
        }
    std::lock_guard<std::mutex> lock(incoming_mutex_);
    auto [nit, ins] = incoming_.emplace(key, std::move(C));
    return nit->second.empty() ? nullptr : &nit->second;
}

void FgtWorkspace::eval_spectral(const Box& box, double* out) {
    int nm = plan_.n_max_;
    int N = 2 * nm + 1;
    const auto& nodes = cheb_engine(K_).nodes;
    double half = 0.5 * box.size();
    std::vector<cplx> px(static_cast<std::size_t>(N) * K_), py(static_cast<std::size_t>(N) * K_);
    for (int ni = 0; ni < N; ++ni)
        for (int a = 0; a < K_; ++a) {
            px[static_cast<std::size_t>(ni) * K_ + a] =
                std::polar(1.0, kTwoPi * (ni - nm) * (box.cx() + half * nodes[a]));
            py[static_cast<std::size_t>(ni) * K_ + a] =
                std::polar(1.0, kTwoPi * (ni - nm) * (box.cy() + half * nodes[a]));
        }
    // out[b*K+a] = Re sum_{nj,ni} modes[nj*N+ni] px[ni][a] py[nj][b]
    std::vector<cplx> tmp(static_cast<std::size_t>(N) * K_);
    for (int nj = 0; nj < N; ++nj)
        for (int a = 0; a < K_; ++a) {
            cplx s = 0.0;
            for (int ni = 0; ni < N; ++ni)
                s += modes_[static_cast<std::size_t>(nj) * N + ni] *
                     px[static_cast<std::size_t>(ni) * K_ + a];
            tmp[static_cast<std::size_t>(nj) * K_ + a] = s;
        }
    for (int b = 0; b < K_; ++b)
        for (int a = 0; a < K_; ++a) {
            cplx s = 0.0;
            for (int nj = 0; nj < N; ++nj)
                s += py[static_cast<std::size_t>(nj) * K_ + b] *
                     tmp[static_cast<std::size_t>(nj) * K_ + a];
            out[b * K_ + a] = s.real();
        }
}

void FgtWorkspace::add_pair(const SourceLeaf& lf, int imx, int imy, const Box& tgt, double* out) {
    int K = K_;
    double inv_norm = 1.0 / (kPi * plan_.delta_);
    int lmax = std::max(lf.box.level, tgt.level);
    double unit = std::ldexp(1.0, -(lmax + 1));
    double dx = tgt.cx() - lf.box.cx() - imx;
    double dy = tgt.cy() - lf.box.cy() - imy;
    auto qx = static_cast<std::int64_t>(std::llround(dx / unit));
    auto qy = static_cast<std::int64_t>(std::llround(dy / unit));
    const auto& Jx = plan_.near_table(lf.box.level, tgt.level, qx);
    const auto& Jy = plan_.near_table(lf.box.level, tgt.level, qy);
    // out[b*K+a] += inv_norm * sum_{n,m} U[m*K+n] Jx[a][n] Jy[b][m]
    std::vector<double> tmp(static_cast<std::size_t>(K) * K);
    for (int a = 0; a < K; ++a)
        for (int m = 0; m < K; ++m) {
            double s = 0.0;
            const double* jr = &Jx[static_cast<std::size_t>(a) * K];
            const double* u = lf.coef + m * K;
            for (int n = 0; n < K; ++n) s += jr[n] * u[n];
            tmp[static_cast<std::size_t>(a) * K + m] = s;
        }
    for (int b = 0; b < K; ++b)
        for (int a = 0; a < K; ++a) {
            double s = 0.0;
            const double* jr = &Jy[static_cast<std::size_t>(b) * K];
            const double* tr = &tmp[static_cast<std::size_t>(a) * K];
            for (int m = 0; m < K; ++m) s += jr[m] * tr[m];
            out[b * K + a] += inv_norm * s;
        }
}

void FgtWorkspace::direct_rec(std::int32_t node_id, int imx, int imy, double prune2,
                              const Box& tgt, double* out) {
    const auto& nd = src_.tree().node(node_id);
    if (box_gap2(nd.box, imx, imy, tgt) > prune2) return;
    if (nd.leaf) {
        if (nd.box.level >= plan_.l_cut_) return; // fine sources ride the plane waves
        SourceLeaf lf{nd.box, src_.coeffs(box_key(nd.box), comp_).data()};
        add_pair(lf, imx, imy, tgt, out);
        return;
    }
    if (nd.box.level >= plan_.l_cut_) return; // whole subtree is fine
    for (int c = 0; c < 4; ++c) direct_rec(nd.child[c], imx, imy, prune2, tgt, out);
}

void FgtWorkspace::add_direct(const Box& tgt, double* out) {
    if (plan_.l_cut_ == 0) return; // every leaf is at or below the cutoff level
    double prune2 = plan_.delta_ * std::log(100.0 / plan_.eps_);
    for (int imy = -1; imy <= 1; ++imy)
        for (int imx = -1; imx <= 1; ++imx) direct_rec(0, imx, imy, prune2, tgt, out);
}

void FgtWorkspace::eval_box(const Box& box, double* out) {
    std::fill(out, out + K_ * K_, 0.0);
    if (box.level > plan_.max_table_level_)
        throw Error("fgt: target box deeper than plan tables");
    if (plan_.spectral_) {
        eval_spectral(box, out);
        return;
    }
    int P = plan_.P_;
    int lc = plan_.l_cut_;
    const auto& nodes = cheb_engine(K_).nodes;

    if (box.level >= lc) {
        // Single cutoff cell: separable evaluation with a center shift.
        std::int64_t ci = box.i >> (box.level - lc), cj = box.j >> (box.level - lc);
        const auto* C = incoming(ci, cj);
        if (C) {
            double dcut = std::ldexp(1.0, -lc);
            double ccx = -0.5 + (ci + 0.5) * dcut, ccy = -0.5 + (cj + 0.5) * dcut;
            double dx = box.cx() - ccx, dy = box.cy() - ccy;
            const auto& E = plan_.eval_tab_[box.level];
            std::vector<cplx> Ex(static_cast<std::size_t>(P) * K_), Ey(static_cast<std::size_t>(P) * K_);
            for (int j = 0; j < P; ++j) {
                cplx phx = std::polar(1.0, plan_.knodes_[j] * dx);
                cplx phy = std::polar(1.0, plan_.knodes_[j] * dy);
                for (int a = 0; a < K_; ++a) {
                    Ex[static_cast<std::size_t>(j) * K_ + a] = phx * E[static_cast<std::size_t>(j) * K_ + a];
                    Ey[static_cast<std::size_t>(j) * K_ + a] = phy * E[static_cast<std::size_t>(j) * K_ + a];
                }
            }
            // tmp[j2][a] = sum_j1 C[j2][j1] Ex[j1][a]
            std::vector<cplx> tmp(static_cast<std::size_t>(P) * K_, 0.0);
            for (int j2 = 0; j2 < P; ++j2) {
                const cplx* row = &(*C)[static_cast<std::size_t>(j2) * P];
                for (int j1 = 0; j1 < P; ++j1) {
                    cplx cv = row[j1];
                    const cplx* ex = &Ex[static_cast<std::size_t>(j1) * K_];
                    cplx* tr = &tmp[static_cast<std::size_t>(j2) * K_];
                    for (int a = 0; a < K_; ++a) tr[a] += cv * ex[a];
                }
            }
            for (int b = 0; b < K_; ++b)
                for (int a = 0; a < K_; ++a) {
                    cplx s = 0.0;
                    for (int j2 = 0; j2 < P; ++j2)
                        s += Ey[static_cast<std::size_t>(j2) * K_ + b] *
                             tmp[static_cast<std::size_t>(j2) * K_ + a];
                    out[b * K_ + a] = s.real();
                }
        }
    } else {
        // Box spans several cutoff cells: evaluate the local expansion per node.
        double dcut = std::ldexp(1.0, -lc);
        double half = 0.5 * box.size();
        for (int b = 0; b < K_; ++b) {
            double y = box.cy() + half * nodes[b];
            for (int a = 0; a < K_; ++a) {
                double x = box.cx() + half * nodes[a];
                auto ci = static_cast<std::int64_t>(std::floor((x + 0.5) / dcut));
                auto cj = static_cast<std::int64_t>(std::floor((y + 0.5) / dcut));
                const auto* C = incoming(ci, cj);
                if (!C) continue;
                double ccx = -0.5 + (ci + 0.5) * dcut, ccy = -0.5 + (cj + 0.5) * dcut;
                std::vector<cplx> phx(P), phy(P);
                for (int j = 0; j < P; ++j) {
                    phx[j] = std::polar(1.0, plan_.knodes_[j] * (x - ccx));
                    phy[j] = std::polar(1.0, plan_.knodes_[j] * (y - ccy));
                }
                cplx s = 0.0;
                for (int j2 = 0; j2 < P; ++j2) {
                    cplx row = 0.0;
                    const cplx* cr = &(*C)[static_cast<std::size_t>(j2) * P];
                    for (int j1 = 0; j1 < P; ++j1) row += cr[j1] * phx[j1];
                    s += phy[j2] * row;
                }
                out[b * K_ + a] = s.real();
            }
        }
    }
    add_direct(box, out);
}

// ---------------------------------------------------------------------------
// public transform entry points
// ---------------------------------------------------------------------------

TreeField FgtPlan::apply(const TreeField& source) const {
    if (source.resolve_eps() > 0.0 && eps_ > source.resolve_eps() * 1.001)
        std::cerr << "[fgt] warning: plan eps " << eps_ << " looser than field eps "
                  << source.resolve_eps() << "\n";
    TreeField out(source.tree(), source.ncomp(), source.order());
    out.set_time(source.time());
    out.set_resolve_eps(source.resolve_eps());
    const auto& e = cheb_engine(K_);
    auto ids = out.tree().leaves();
    for (int c = 0; c < source.ncomp(); ++c) {
        FgtWorkspace ws(*this, source, c);
        std::vector<std::vector<double>> vals(ids.size());
        parallel_for(ids.size(), [&](std::size_t k) {
            vals[k].resize(static_cast<std::size_t>(K_) * K_);
            ws.eval_box(out.tree().node(ids[k]).box, vals[k].data());
        });
        for (std::size_t k = 0; k < ids.size(); ++k) {
            auto key = box_key(out.tree().node(ids[k]).box);
            e.values_to_coeffs(vals[k].data(), out.coeffs(key, c).data());
        }
    }
    return out;
}

TreeField FgtPlan::apply_adaptive(const TreeField& source, double eps_out, int max_level) const {
    max_level = std::min(max_level, max_table_level_ - 1);
    std::vector<std::unique_ptr<FgtWorkspace>> ws;
    for (int c = 0; c < source.ncomp(); ++c)
        ws.push_back(std::make_unique<FgtWorkspace>(*this, source, c));

    const auto& e = cheb_engine(K_);
    int nc = source.ncomp();
    TreeField out(source.tree(), nc, source.order());
    out.set_time(source.time());
    out.set_resolve_eps(eps_out);

    // Resolution test per leaf: the conservative coefficient estimate can
    // certify resolution outright; otherwise compare the leaf interpolant
    // against freshly transformed values on the four child grids. Refining
    // below the transform's own error floor is pointless, so the mismatch
    // threshold is clamped there.
    struct LeafEval {
        std::vector<std::vector<double>> vals;       // per comp, K x K
        std::vector<std::vector<double>> child_vals; // per comp*4 (empty if certified)
        bool resolved = true;
    };
    auto eval_leaf = [&](const Box& b) {
        LeafEval r;
        r.vals.resize(nc);
        double scale = 0.0;
        std::vector<ChebPatch> patches(nc);
        for (int c = 0; c < nc; ++c) {
            r.vals[c].resize(static_cast<std::size_t>(K_) * K_);
            ws[c]->eval_box(b, r.vals[c].data());
            for (double v : r.vals[c]) scale = std::max(scale, std::fabs(v));
            patches[c].K = K_;
            patches[c].box = b;
            patches[c].coef.resize(static_cast<std::size_t>(K_) * K_);
            e.values_to_coeffs(r.vals[c].data(), patches[c].coef.data());
        }
        bool certified = true;
        for (int c = 0; c < nc; ++c)
            if (resolve_error(patches[c]) > eps_out) certified = false;
        if (certified) return r;
        double tol = std::max(eps_out, 4.0 * pw_err_ * scale);
        r.child_vals.resize(static_cast<std::size_t>(nc) * 4);
        static constexpr int cdi[4] = {0, 1, 0, 1};
        static constexpr int cdj[4] = {0, 0, 1, 1};
        std::vector<double> interp(static_cast<std::size_t>(K_) * K_);
        for (int c = 0; c < nc; ++c)
            for (int q = 0; q < 4; ++q) {
                Box cb{b.level + 1, 2 * b.i + cdi[q], 2 * b.j + cdj[q]};
                auto& cv = r.child_vals[static_cast<std::size_t>(c) * 4 + q];
                cv.resize(static_cast<std::size_t>(K_) * K_);
                ws[c]->eval_box(cb, cv.data());
                e.eval_child_grid(patches[c].coef.data(), cdi[q], cdj[q], interp.data());
                for (int k = 0; k < K_ * K_ && r.resolved; ++k)
                    if (std::fabs(interp[k] - cv[k]) > tol) r.resolved = false;
            }
        return r;
    };

    bool lmax_hit = false;
    std::vector<std::int32_t> pending = out.tree().leaves();
    while (!pending.empty()) {
        std::vector<Box> boxes(pending.size());
        for (std::size_t k = 0; k < pending.size(); ++k)
            boxes[k] = out.tree().node(pending[k]).box;
        std::vector<LeafEval> evals(pending.size());
        parallel_for(pending.size(), [&](std::size_t k) { evals[k] = eval_leaf(boxes[k]); });
        std::vector<std::int32_t> next;
        std::vector<std::pair<std::uint64_t, std::vector<std::vector<double>>>> writes;
        for (std::size_t k = 0; k < pending.size(); ++k) {
            std::int32_t id = pending[k];
            if (evals[k].resolved || boxes[k].level >= max_level) {
                if (!evals[k].resolved) lmax_hit = true;
                writes.emplace_back(box_key(boxes[k]), std::move(evals[k].vals));
                continue;
            }
            auto kids = out.tree().subdivide(id);
            for (auto kid : kids) next.push_back(kid);
        }
        out.sync_storage();
        for (auto& [key, vals] : writes)
            for (int c = 0; c < nc; ++c)
                e.values_to_coeffs(vals[c].data(), out.coeffs(key, c).data());
        pending = std::move(next);
    }

    out.coarsen_resolved(eps_out);
    out.tree().enforce_balance([&out](std::int32_t id) { out.subdivide_leaf(id); });
    out.sync_storage();
    out.set_max_level_hit(lmax_hit);
    return out;
}

const FgtPlan& fgt_plan(double delta, double eps, int K) {
    struct KeyHash {
        std::size_t operator()(const std::tuple<double, double, int>& k) const {
            auto h1 = std::hash<double>()(std::get<0>(k));
            auto h2 = std::hash<double>()(std::get<1>(k));
            auto h3 = std::hash<int>()(std::get<2>(k));
            return h1 ^ (h2 * 0x9e3779b97f4a7c15ull) ^ (h3 << 1);
        }
    };
    static std::unordered_map<std::tuple<double, double, int>, std::unique_ptr<FgtPlan>, KeyHash> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_tuple(delta, eps, K);
    auto it = cache.find(key);
    if (it == cache.end()) {
        auto plan = std::make_unique<FgtPlan>(FgtPlan::build(delta, eps, K));
        it = cache.emplace(key, std::move(plan)).first;
    }
    return *it->second;
}

} // namespace heatpot
