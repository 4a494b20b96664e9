#include "heatpot/numutil.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace heatpot {

namespace {

GaussLegendre make_rule(int n) {
    // Newton iteration on Legendre polynomials, symmetric nodes.
    GaussLegendre r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int k = 0; k < (n + 1) / 2; ++k) {
        double x = std::cos(kPi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[k] = -x;
        r.nodes[n - 1 - k] = x;
        r.weights[k] = w;
        r.weights[n - 1 - k] = w;
    }
    return r;
}

} // namespace

const GaussLegendre& gauss_legendre(int n) {
    static std::map<int, GaussLegendre> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
    return it->second;
}

namespace {

double gl_panel(const std::function<double(double)>& f, double a, double b) {
    const auto& gl = gauss_legendre(20);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k)
        s += gl.weights[k] * f(mid + half * gl.nodes[k]);
    return s * half;
}

double adapt_rec(const std::function<double(double)>& f, double a, double b,
                 double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double left = gl_panel(f, a, m);
    double right = gl_panel(f, m, b);
    if (std::fabs(left + right - whole) < tol || depth <= 0) return left + right;
    return adapt_rec(f, a, m, left, 0.5 * tol, depth - 1) +
           adapt_rec(f, m, b, right, 0.5 * tol, depth - 1);
}

} // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth) {
    if (a == b) return 0.0;
    return adapt_rec(f, a, b, gl_panel(f, a, b), tol, max_depth);
}

bool solve_dense(std::span<double> J, std::span<double> r, std::span<double> x, int p) {
    for (int i = 0; i < p; ++i) x[i] = r[i];
    for (int c = 0; c < p; ++c) {
        int piv = c;
        for (int i = c + 1; i < p; ++i)
            if (std::fabs(J[i * p + c]) > std::fabs(J[piv * p + c])) piv = i;
        if (std::fabs(J[piv * p + c]) < 1e-300) return false;
        if (piv != c) {
            for (int k = 0; k < p; ++k) std::swap(J[c * p + k], J[piv * p + k]);
            std::swap(x[c], x[piv]);
        }
        for (int i = c + 1; i < p; ++i) {
            double f = J[i * p + c] / J[c * p + c];
            for (int k = c; k < p; ++k) J[i * p + k] -= f * J[c * p + k];
            x[i] -= f * x[c];
        }
    }
    for (int i = p - 1; i >= 0; --i) {
        for (int k = i + 1; k < p; ++k) x[i] -= J[i * p + k] * x[k];
        x[i] /= J[i * p + i];
    }
    return true;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_slope: need >= 2 samples");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace heatpot
