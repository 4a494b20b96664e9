#pragma once

#include "heatpot/treefield.hpp"

namespace heatpot {

/// F split into its solenoidal and gradient parts, F = F_S + F_G with
/// F_G = grad(potential). The zero-wavevector (mean) part of F sits in F_S,
/// which keeps the pressure gradient mean-free in the Stokes setting.
struct Decomposition {
    TreeField solenoidal; // 2 components
    TreeField gradient;   // 2 components
    TreeField potential;  // scalar
};

/// Periodic Poisson solve, uniform-spectral backend: the (resolved) rhs is
/// resampled to a uniform tensor grid at the tree's finest level (capped),
/// the exact Fourier multiplier -1/(4 pi^2 |n|^2) is applied, and the
/// potential plus its analytic mode-wise derivatives are evaluated back at
/// the tree nodes. Returns a 3-component field (phi, phi_x, phi_y) on the
/// rhs tree with mean(phi) = 0.
///
/// Requires |mean(rhs)| <= 10 eps max|rhs| (periodic solvability); violations
/// are rejected with the measured mean in the message.
TreeField poisson_solve_periodic(const TreeField& rhs, double eps, int grid_cap = 1024);

/// Helmholtz decomposition of a resolved 2-component field: div F is formed
/// by per-leaf Chebyshev differentiation, phi solves the Poisson problem
/// above, F_G = grad phi (solver-side derivatives), F_S = F - F_G.
Decomposition helmholtz_decompose(const TreeField& F, double eps, int grid_cap = 1024);

} // namespace heatpot
