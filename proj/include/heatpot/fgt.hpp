#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "heatpot/treefield.hpp"

namespace heatpot {

enum class KernelBranch { Auto, Images, Fourier };

/// Periodic heat kernel G(x, tau) on the unit torus (2D), normalized so that
/// its integral over D is 1. Evaluated through whichever of the image and
/// Fourier series converges faster, truncated at 1e-14. Requires tau > 0.
double heat_kernel(double x, double y, double tau, double D,
                   KernelBranch branch = KernelBranch::Auto);

/// 1D factor of the kernel (the 2D kernel is the product of two of these).
double heat_kernel_1d(double x, double dt_product, KernelBranch branch = KernelBranch::Auto);

/// Periodic continuous Gauss transform of piecewise-Chebyshev tree fields:
///
///   v(x) = 1/(pi delta) * int_D sum_images exp(-|x - y - n|^2 / delta) u(y) dy.
///
/// With delta = 4 D tau this is convolution with the heat kernel. The plan
/// precomputes, for one (delta, eps) pair: the cutoff level where the kernel
/// decays below eps across one box, a trapezoidal plane-wave quadrature of
/// the 1D Gaussian verified to eps/10, per-level outgoing/evaluation tables,
/// and 1D Gaussian-moment tables against Chebyshev sources for the near
/// field of boxes coarser than the cutoff level. Kernels wider than the box
/// degenerate to a small Fourier synthesis ("spectral mode").
class FgtPlan {
public:
    /// Build a plan; requires delta > 0 and eps in [1e-12, 1e-3].
    /// Throws PlanError if the plane-wave verification sweep cannot reach
    /// eps/10 even after enlarging the quadrature.
    static FgtPlan build(double delta, double eps, int K);

    double delta() const { return delta_; }
    double eps() const { return eps_; }
    int order() const { return K_; }
    bool spectral() const { return spectral_; }
    int cutoff_level() const { return l_cut_; }
    int plane_wave_count() const { return P_; }

    /// Transform on the source's own tree; every output value is within
    /// 5 eps ||u||_inf of the exact periodic transform.
    TreeField apply(const TreeField& source) const;

    /// Transform onto a tree adapted until the output is resolved to eps_out.
    TreeField apply_adaptive(const TreeField& source, double eps_out,
                             int max_level = 12) const;

    /// Max |plane-wave sum - exp(-x^2/delta)| over the verification range
    /// (diagnostic; what the build sweep enforces to be < eps/10).
    double plane_wave_error() const { return pw_err_; }

private:
    FgtPlan() = default;
    void build_quadrature(int M);
    void build_level_tables();
    double verify_1d() const;

    friend class FgtWorkspace;

    double delta_ = 0.0;
    double eps_ = 0.0;
    int K_ = 8;
    bool spectral_ = false;
    double pw_err_ = 0.0;

    // plane-wave machinery
    int l_cut_ = 0;
    int P_ = 0;      // nodes per dimension (odd)
    double hk_ = 0.0;
    std::vector<double> knodes_;
    std::vector<double> w1d_;    // true 1D quadrature weights (verification)
    std::vector<double> wfold_;  // w1d / sqrt(pi delta), folded into outgoing tables
    int max_table_level_ = 0;
    // per level l in [l_cut, max_table_level]: P x K tables
    std::vector<std::vector<std::complex<double>>> outgoing_tab_; // wfold_j * int T_n e^{-i k_j (s/2) t}
    std::vector<std::vector<std::complex<double>>> eval_tab_;     // e^{i k_j (s/2) xi_a}

    // spectral mode
    int n_max_ = 0;
    std::vector<std::vector<std::complex<double>>> mode_tab_; // per level: (2n_max+1) x K

    // near-field 1D tables: key (l_src, l_tgt, quantized center offset) -> K x K [a*K+n];
    // values depend only on the key, so lazy filling stays deterministic.
    struct NearCache {
        std::mutex mutex;
        std::unordered_map<std::uint64_t, std::vector<double>> tables;
    };
    std::shared_ptr<NearCache> near_ = std::make_shared<NearCache>();
    const std::vector<double>& near_table(int l_src, int l_tgt, std::int64_t q) const;
};

/// Shared plan cache keyed by (delta, eps, K); plans are immutable.
const FgtPlan& fgt_plan(double delta, double eps, int K);

} // namespace heatpot
