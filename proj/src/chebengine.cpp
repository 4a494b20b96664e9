#include "heatpot/chebengine.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "heatpot/numutil.hpp"

namespace heatpot {

namespace {

void cheb_row(double x, int K, double* row) {
    row[0] = 1.0;
    if (K > 1) row[1] = x;
    for (int n = 2; n < K; ++n) row[n] = 2.0 * x * row[n - 1] - row[n - 2];
}

ChebEngine make_engine(int K) {
    ChebEngine e;
    e.K = K;
    e.nodes.resize(K);
    for (int a = 0; a < K; ++a) e.nodes[a] = -std::cos((2.0 * a + 1.0) * kPi / (2.0 * K));

    e.c2v.resize(K * K);
    for (int a = 0; a < K; ++a) cheb_row(e.nodes[a], K, &e.c2v[a * K]);

    // Discrete orthogonality of first-kind points gives the inverse in closed form.
    e.v2c.resize(K * K);
    for (int n = 0; n < K; ++n) {
        double scale = (n == 0 ? 1.0 : 2.0) / K;
        for (int a = 0; a < K; ++a) e.v2c[n * K + a] = scale * e.c2v[a * K + n];
    }

    for (int d = 0; d < 2; ++d) {
        e.child[d].resize(K * K);
        e.to_child[d].resize(K * K);
        for (int a = 0; a < K; ++a) {
            cheb_row(0.5 * (e.nodes[a] + (d == 0 ? -1.0 : 1.0)), K, &e.child[d][a * K]);
            cheb_row(2.0 * e.nodes[a] + (d == 0 ? 1.0 : -1.0), K, &e.to_child[d][a * K]);
        }
    }
    e.half_split = 0;
    while (e.half_split < K && e.nodes[e.half_split] < 0.0) ++e.half_split;
    return e;
}

// out[a*K+b] = sum_n M[a*K+n] c[n + b*K] etc.; tensor application helpers.
// Layout: flat index b*K + a with a the x index (x fastest).
void apply_x(const double* M, const double* in, double* out, int K) {
    for (int b = 0; b < K; ++b)
        for (int a = 0; a < K; ++a) {
            double s = 0.0;
            const double* row = M + a * K;
            const double* col = in + b * K;
            for (int n = 0; n < K; ++n) s += row[n] * col[n];
            out[b * K + a] = s;
        }
}

void apply_y(const double* M, const double* in, double* out, int K) {
    for (int b = 0; b < K; ++b) {
        const double* row = M + b * K;
        for (int a = 0; a < K; ++a) {
            double s = 0.0;
            for (int m = 0; m < K; ++m) s += row[m] * in[m * K + a];
            out[b * K + a] = s;
        }
    }
}

} // namespace

void ChebEngine::coeffs_to_values(const double* c, double* v) const {
    std::vector<double> tmp(K * K);
    apply_x(c2v.data(), c, tmp.data(), K);
    apply_y(c2v.data(), tmp.data(), v, K);
}

void ChebEngine::values_to_coeffs(const double* v, double* c) const {
    // v2c rows are indexed by degree; reuse apply_* by transposed-matrix trick:
    // build tmp[n + b*K] = sum_a v2c[n*K+a] v[a + b*K].
    std::vector<double> tmp(K * K);
    for (int b = 0; b < K; ++b)
        for (int n = 0; n < K; ++n) {
            double s = 0.0;
            const double* row = &v2c[n * K];
            const double* col = v + b * K;
            for (int a = 0; a < K; ++a) s += row[a] * col[a];
            tmp[b * K + n] = s;
        }
    for (int m = 0; m < K; ++m)
        for (int n = 0; n < K; ++n) {
            double s = 0.0;
            const double* row = &v2c[m * K];
            for (int b = 0; b < K; ++b) s += row[b] * tmp[b * K + n];
            c[m * K + n] = s;
        }
}

double ChebEngine::eval(const double* c, double xi, double eta) const {
    // Clenshaw along x for each y-degree, then Clenshaw along y.
    double acc0 = 0.0, acc1 = 0.0; // Clenshaw state in y
    for (int m = K - 1; m >= 0; --m) {
        const double* row = c + m * K;
        double b1 = 0.0, b2 = 0.0;
        for (int n = K - 1; n >= 1; --n) {
            double bn = row[n] + 2.0 * xi * b1 - b2;
            b2 = b1;
            b1 = bn;
        }
        double rowval = row[0] + xi * b1 - b2;
        if (m >= 1) {
            double bm = rowval + 2.0 * eta * acc0 - acc1;
            acc1 = acc0;
            acc0 = bm;
        } else {
            return rowval + eta * acc0 - acc1;
        }
    }
    return 0.0; // unreachable for K >= 1
}

void ChebEngine::eval_child_grid(const double* c, int di, int dj, double* out) const {
    std::vector<double> tmp(K * K);
    apply_x(child[di].data(), c, tmp.data(), K);
    apply_y(child[dj].data(), tmp.data(), out, K);
}

void ChebEngine::diff_axis(const double* c, int axis, double* out) const {
    // Chebyshev derivative recurrence d_n = d_{n+2} + 2(n+1) c_{n+1}, d_0 halved.
    auto diff_line = [this](const double* in, int stride, double* o) {
        double dp1 = 0.0, dp2 = 0.0;
        for (int n = K - 2; n >= 0; --n) {
            double d = dp2 + 2.0 * (n + 1) * in[(n + 1) * stride];
            o[n * stride] = d;
            dp2 = dp1;
            dp1 = d;
        }
        o[(K - 1) * stride] = 0.0;
        o[0] *= 0.5;
    };
    if (axis == 0) {
        for (int m = 0; m < K; ++m) diff_line(c + m * K, 1, out + m * K);
    } else {
        for (int n = 0; n < K; ++n) diff_line(c + n, K, out + n);
    }
}

double ChebEngine::integral(const double* c) const {
    // int_{-1}^{1} T_n = 0 (n odd), 2/(1-n^2) (n even).
    double total = 0.0;
    for (int m = 0; m < K; m += 2) {
        double wy = 2.0 / (1.0 - static_cast<double>(m) * m);
        for (int n = 0; n < K; n += 2)
            total += c[m * K + n] * wy * 2.0 / (1.0 - static_cast<double>(n) * n);
    }
    return total;
}

const ChebEngine& cheb_engine(int K) {
    if (K < 2 || K > 48) throw std::invalid_argument("cheb_engine: order out of range");
    static std::map<int, ChebEngine> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(K);
    if (it == cache.end()) it = cache.emplace(K, make_engine(K)).first;
    return it->second;
}

} // namespace heatpot
