#pragma once

#include <array>
#include <vector>

#include "heatpot/chebengine.hpp"
#include "heatpot/geometry.hpp"

namespace heatpot {

/// Field values of one component at the K x K tensor Chebyshev nodes of a box.
/// Flat index b*K + a with a the x index (x fastest); node a sits at
/// cx + (size/2) * xi_a with xi_a the first-kind points in increasing order.
struct LeafGrid {
    int K = 0;
    Box box;
    std::vector<double> val;

    double node_x(int a) const { return box.cx() + 0.5 * box.size() * cheb_engine(K).nodes[a]; }
    double node_y(int b) const { return box.cy() + 0.5 * box.size() * cheb_engine(K).nodes[b]; }
};

/// Tensor Chebyshev representation u(x,y) = sum_{n,m} u_{n,m} T_n(xi) T_m(eta)
/// of one field component on one box, xi/eta the box-scaled coordinates.
/// Coefficient u_{n,m} is stored at m*K + n (x degree fastest).
struct ChebPatch {
    int K = 0;
    Box box;
    std::vector<double> coef;
};

/// Interpolate nodal values; exact inverse of coeffs2vals at the nodes.
ChebPatch vals2coeffs(const LeafGrid& grid);

/// Evaluate the series back at the nodes.
LeafGrid coeffs2vals(const ChebPatch& patch);

/// Stable pointwise evaluation; x must lie in the patch box (tiny slack allowed).
double eval_point(const ChebPatch& patch, double x, double y);

/// Partial derivative along axis (0 = x, 1 = y) on the same box.
ChebPatch diff(const ChebPatch& patch, int axis);

/// Resolution estimate: l2 norm of the coefficients with n^2 + m^2 >= K^2
/// inside the stored block, divided by K.
double tail_error(const ChebPatch& patch);

/// Estimator used for refinement decisions: like tail_error but also counts
/// the last two rows and columns of the block. The corner-only sum is blind
/// to functions that vary along a single axis (their energy sits at
/// (K-1, 0) etc., inside the quarter-disk), so it cannot drive refinement
/// for them; the augmented sum can. Never smaller than tail_error.
double resolve_error(const ChebPatch& patch);

/// Evaluate the parent interpolant at the four child node grids
/// (order SW, SE, NW, NE).
std::array<LeafGrid, 4> interp_to_children(const ChebPatch& patch);

struct ParentFit {
    ChebPatch parent;
    double err = 0.0; // max |parent interpolant - child value| over all child nodes
};

/// Build a parent patch from four sibling patches (SW, SE, NW, NE order) by
/// sampling the children at the parent nodes, and report the max mismatch of
/// the parent interpolant against the child values at all 4 K^2 child nodes.
ParentFit parent_fit_error(const std::array<ChebPatch, 4>& children);

/// Discrete l2 error of the patch interpolant against f sampled on a
/// 2K x 2K first-kind grid covering the box (the alternative resolve test).
double l2_resolve_error(const ChebPatch& patch,
                        const std::vector<double>& f_on_2k_grid);

/// Sample positions for l2_resolve_error: the 2K x 2K first-kind nodes.
std::vector<Vec2> resolve_grid_points(const Box& box, int K);

} // namespace heatpot
