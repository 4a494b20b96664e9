#pragma once

#include <vector>

namespace heatpot {

/// Precomputed dense transforms for order-K tensor Chebyshev grids.
///
/// Nodes are Chebyshev points of the first kind in increasing order,
/// xi_a = -cos((2a+1) pi / (2K)), a = 0..K-1; no node lies on a box edge.
/// All matrices are row-major K x K. For K <= 16 dense transforms beat
/// fast cosine transforms and keep the inner loops branch-free.
struct ChebEngine {
    int K;
    std::vector<double> nodes;     // xi_a
    std::vector<double> c2v;       // [a*K+n] = T_n(xi_a)
    std::vector<double> v2c;       // [n*K+a] = (2-delta_n0)/K * T_n(xi_a)
    std::vector<double> child[2];  // [a*K+n] = T_n((xi_a -+ 1)/2): parent -> child-d node values
    std::vector<double> to_child[2];   // [a*K+n] = T_n(2 xi_a +- 1): child-d coeffs at parent nodes
    int half_split;                // parent nodes with a < half_split lie in child 0

    /// coeffs -> values, tensor grid; in/out length K*K, x index fastest.
    void coeffs_to_values(const double* c, double* v) const;
    /// values -> coeffs (exact inverse at the nodes).
    void values_to_coeffs(const double* v, double* c) const;
    /// Clenshaw evaluation of the coefficient block at scaled point (xi, eta) in [-1,1]^2.
    double eval(const double* c, double xi, double eta) const;
    /// Evaluate the series at the K x K nodes of child (di, dj); out length K*K.
    void eval_child_grid(const double* c, int di, int dj, double* out) const;
    /// d/dxi applied to the coefficient block along the given axis (0 = x, 1 = y).
    void diff_axis(const double* c, int axis, double* out) const;
    /// Integral of the series over [-1,1]^2 (unscaled).
    double integral(const double* c) const;
};

/// Shared engine for a given order, 2 <= K <= 48. Thread-safe.
const ChebEngine& cheb_engine(int K);

} // namespace heatpot
