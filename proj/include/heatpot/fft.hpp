#pragma once

#include <complex>
#include <vector>

namespace heatpot {

/// In-place radix-2 complex FFT, n a power of two. sign = -1: forward
/// (e^{-i 2 pi ...}), +1: inverse WITHOUT the 1/n normalization.
void fft_inplace(std::complex<double>* data, std::size_t n, int sign);

/// 2D transform of row-major n x n data (rows then columns), same convention.
void fft2_inplace(std::vector<std::complex<double>>& data, std::size_t n, int sign);

} // namespace heatpot
