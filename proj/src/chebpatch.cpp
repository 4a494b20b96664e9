#include "heatpot/chebpatch.hpp"

#include <cmath>
#include <stdexcept>

#include "heatpot/errors.hpp"
#include "heatpot/numutil.hpp"

namespace heatpot {

ChebPatch vals2coeffs(const LeafGrid& grid) {
    const auto& e = cheb_engine(grid.K);
    ChebPatch p;
    p.K = grid.K;
    p.box = grid.box;
    p.coef.resize(grid.K * grid.K);
    e.values_to_coeffs(grid.val.data(), p.coef.data());
    return p;
}

LeafGrid coeffs2vals(const ChebPatch& patch) {
    const auto& e = cheb_engine(patch.K);
    LeafGrid g;
    g.K = patch.K;
    g.box = patch.box;
    g.val.resize(patch.K * patch.K);
    e.coeffs_to_values(patch.coef.data(), g.val.data());
    return g;
}

double eval_point(const ChebPatch& patch, double x, double y) {
    double s = patch.box.size();
    double xi = 2.0 * (x - patch.box.cx()) / s;
    double eta = 2.0 * (y - patch.box.cy()) / s;
    const double slack = 1.0 + 1e-9;
    if (std::fabs(xi) > slack || std::fabs(eta) > slack)
        throw Error("eval_point: point outside patch box");
    return cheb_engine(patch.K).eval(patch.coef.data(), xi, eta);
}

ChebPatch diff(const ChebPatch& patch, int axis) {
    const auto& e = cheb_engine(patch.K);
    ChebPatch d;
    d.K = patch.K;
    d.box = patch.box;
    d.coef.resize(patch.K * patch.K);
    e.diff_axis(patch.coef.data(), axis, d.coef.data());
    double scale = 2.0 / patch.box.size(); // chain rule for the box map
    for (auto& c : d.coef) c *= scale;
    return d;
}

double tail_error(const ChebPatch& patch) {
    int K = patch.K;
    double s = 0.0;
    for (int m = 0; m < K; ++m)
        for (int n = 0; n < K; ++n)
            if (n * n + m * m >= K * K) {
                double c = patch.coef[m * K + n];
                s += c * c;
            }
    return std::sqrt(s) / K;
}

double resolve_error(const ChebPatch& patch) {
    int K = patch.K;
    double s = 0.0;
    for (int m = 0; m < K; ++m)
        for (int n = 0; n < K; ++n)
            if (n * n + m * m >= K * K || n >= K - 2 || m >= K - 2) {
                double c = patch.coef[m * K + n];
                s += c * c;
            }
    return std::sqrt(s) / K;
}

std::array<LeafGrid, 4> interp_to_children(const ChebPatch& patch) {
    const auto& e = cheb_engine(patch.K);
    std::array<LeafGrid, 4> out;
    static constexpr int cdi[4] = {0, 1, 0, 1};
    static constexpr int cdj[4] = {0, 0, 1, 1};
    for (int c = 0; c < 4; ++c) {
        LeafGrid& g = out[c];
        g.K = patch.K;
        g.box.level = patch.box.level + 1;
        g.box.i = 2 * patch.box.i + cdi[c];
        g.box.j = 2 * patch.box.j + cdj[c];
        g.val.resize(patch.K * patch.K);
        e.eval_child_grid(patch.coef.data(), cdi[c], cdj[c], g.val.data());
    }
    return out;
}

ParentFit parent_fit_error(const std::array<ChebPatch, 4>& children) {
    int K = children[0].K;
    const auto& e = cheb_engine(K);
    const Box& sw = children[0].box;
    if (sw.level < 1) throw Error("parent_fit_error: children at level 0");

    ParentFit r;
    r.parent.K = K;
    r.parent.box = Box{sw.level - 1, sw.i / 2, sw.j / 2};
    r.parent.coef.resize(K * K);

    // Parent node values sampled from whichever child contains each node.
    std::vector<double> pv(K * K);
    int split = e.half_split;
    for (int b = 0; b < K; ++b) {
        int dj = b < split ? 0 : 1;
        for (int a = 0; a < K; ++a) {
            int di = a < split ? 0 : 1;
            const ChebPatch& ch = children[dj * 2 + di];
            double s = 0.0;
            const double* rx = &e.to_child[di][a * K];
            const double* ry = &e.to_child[dj][b * K];
            for (int m = 0; m < K; ++m) {
                double t = 0.0;
                const double* row = &ch.coef[m * K];
                for (int n = 0; n < K; ++n) t += rx[n] * row[n];
                s += ry[m] * t;
            }
            pv[b * K + a] = s;
        }
    }
    e.values_to_coeffs(pv.data(), r.parent.coef.data());

    double err = 0.0;
    std::vector<double> interp(K * K);
    static constexpr int cdi[4] = {0, 1, 0, 1};
    static constexpr int cdj[4] = {0, 0, 1, 1};
    for (int c = 0; c < 4; ++c) {
        e.eval_child_grid(r.parent.coef.data(), cdi[c], cdj[c], interp.data());
        std::vector<double> cv(K * K);
        e.coeffs_to_values(children[c].coef.data(), cv.data());
        for (int k = 0; k < K * K; ++k)
            err = std::max(err, std::fabs(interp[k] - cv[k]));
    }
    r.err = err;
    return r;
}

std::vector<Vec2> resolve_grid_points(const Box& box, int K) {
    int M = 2 * K;
    std::vector<Vec2> pts(M * M);
    double h = 0.5 * box.size();
    for (int b = 0; b < M; ++b) {
        double eta = -std::cos((2.0 * b + 1.0) * kPi / (2.0 * M));
        for (int a = 0; a < M; ++a) {
            double xi = -std::cos((2.0 * a + 1.0) * kPi / (2.0 * M));
            pts[b * M + a] = Vec2{box.cx() + h * xi, box.cy() + h * eta};
        }
    }
    return pts;
}

double l2_resolve_error(const ChebPatch& patch, const std::vector<double>& f) {
    int M = 2 * patch.K;
    if (static_cast<int>(f.size()) != M * M)
        throw Error("l2_resolve_error: expected 2K x 2K samples");
    auto pts = resolve_grid_points(patch.box, patch.K);
    double s = 0.0;
    for (int k = 0; k < M * M; ++k) {
        double d = eval_point(patch, pts[k].x, pts[k].y) - f[k];
        s += d * d;
    }
    return std::sqrt(s / (M * M));
}

} // namespace heatpot
