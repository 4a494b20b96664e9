#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "heatpot/treefield.hpp"

namespace heatpot::oracles {

/// M x M uniform samples of a periodic field on D, sample (i, j) at
/// (-1/2 + i/M, -1/2 + j/M), p components stored as consecutive planes.
/// These brute-force references share no code with the production
/// transforms they check.
struct UniformGridField {
    int M = 0;
    int ncomp = 1;
    std::vector<double> data; // [c*M*M + j*M + i]

    double& at(int i, int j, int c = 0) { return data[static_cast<std::size_t>(c) * M * M + static_cast<std::size_t>(j) * M + i]; }
    double at(int i, int j, int c = 0) const { return data[static_cast<std::size_t>(c) * M * M + static_cast<std::size_t>(j) * M + i]; }
    double x(int i) const { return -0.5 + static_cast<double>(i) / M; }
    double y(int j) const { return -0.5 + static_cast<double>(j) / M; }
};

UniformGridField sample_uniform(const std::function<double(double, double)>& f, int M);

/// Naive periodic Gauss transform: per target, adaptive Gauss-Legendre
/// quadrature of the image-summed kernel against every source patch,
/// subdivided until 1e-13 converged. O(N * targets); test scale only.
std::vector<double> direct_gauss_transform(const TreeField& source, double delta,
                                           const std::vector<Vec2>& targets, int comp = 0);

struct SpectralPoisson {
    UniformGridField potential;
    UniformGridField grad_x;
    UniformGridField grad_y;
};

/// Reference periodic Poisson solve on a uniform grid by direct (row/column
/// O(M^2) per line) discrete Fourier transforms: multiplier -1/(4 pi^2 |n|^2),
/// gradients by 2 pi i n. Rejects rhs whose mean exceeds 1e-10 * max|rhs|.
SpectralPoisson spectral_poisson(const UniformGridField& rhs);

/// Dense-quadrature Duhamel evaluation for linear problems: every Fourier
/// mode of u0 decays with exp(-4 pi^2 |n|^2 D t) and the forcing integral
/// is integrated mode-wise with panels geometrically refined toward t_final.
UniformGridField duhamel_dense(const std::function<double(double, double, double)>& forcing,
                               const UniformGridField& u0, double D, double t_final,
                               int n_quad = 20);

/// Forward DFT of one component (naive summation): modes k1, k2 in
/// [-M/2, M/2); index [(k2 + M/2) * M + (k1 + M/2)].
std::vector<std::complex<double>> naive_dft(const UniformGridField& g, int comp = 0);

} // namespace heatpot::oracles
