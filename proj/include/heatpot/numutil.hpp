#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace heatpot {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Gauss-Legendre rule on [-1, 1]: nodes[k], weights[k], k < n.
/// Rules are computed once per order and cached.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const GaussLegendre& gauss_legendre(int n);

/// Adaptive Gauss-Legendre integration of f over [a, b] to absolute
/// tolerance tol (recursive bisection, 20-point panels).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth = 40);

/// Solve the p x p dense system J x = r in place by partial-pivot elimination.
/// Returns false if the matrix is numerically singular.
bool solve_dense(std::span<double> J, std::span<double> r, std::span<double> x, int p);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

} // namespace heatpot
