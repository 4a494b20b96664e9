#include "heatpot/fft.hpp"

#include <cmath>
#include <stdexcept>

#include "heatpot/numutil.hpp"

namespace heatpot {

void fft_inplace(std::complex<double>* a, std::size_t n, int sign) {
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: size not a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * kTwoPi / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

void fft2_inplace(std::vector<std::complex<double>>& data, std::size_t n, int sign) {
    if (data.size() != n * n) throw std::invalid_argument("fft2: bad size");
    for (std::size_t r = 0; r < n; ++r) fft_inplace(data.data() + r * n, n, sign);
    std::vector<std::complex<double>> col(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t r = 0; r < n; ++r) col[r] = data[r * n + c];
        fft_inplace(col.data(), n, sign);
        for (std::size_t r = 0; r < n; ++r) data[r * n + c] = col[r];
    }
}

} // namespace heatpot
