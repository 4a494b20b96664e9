#pragma once

#include <functional>

#include "heatpot/treefield.hpp"

namespace heatpot {

/// Evaluator for the new time level: writes u_{n+1}(x) and F(u_{n+1}, x, t_{n+1})
/// at an arbitrary point (for implicit semilinear steps this solves the
/// pointwise nonlinear equation at x; for explicit steps it interpolates the
/// already-computed fields).
using AdaptProvider =
    std::function<void(double x, double y, std::span<double> u, std::span<double> F)>;

struct SpatialAdaptResult {
    TreeField u; // the new solution on the adapted, balanced tree
    int refined = 0;
    int coarsened = 0;
    bool lmax_hit = false;
};

/// The per-step refinement/coarsening driver.
///
/// Step 1 walks the leaves of the starting tree, interpolates F on each and
/// compares against provider values on the four child grids; boxes whose
/// mismatch (relative to the global max |F|, and to max |u| when
/// test_u_refinement is set) reaches eps are subdivided recursively.
/// Step 2 sweeps fine-to-coarse and deletes child quadruples wherever the
/// parent interpolant reproduces both u and F at every child node, skipping
/// deletions that would break the 2:1 balance. The result is re-balanced.
SpatialAdaptResult spatial_adapt(const AdaptiveTree& start, int ncomp, int K,
                                 const AdaptProvider& provider, double eps, int max_level,
                                 bool test_u_refinement);

} // namespace heatpot
