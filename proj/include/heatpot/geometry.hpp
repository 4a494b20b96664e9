#pragma once

#include <cmath>
#include <cstdint>

namespace heatpot {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Wrap a coordinate into the periodic unit cell [-1/2, 1/2).
inline double wrap_unit(double x) {
    double y = x - std::floor(x + 0.5);
    if (y >= 0.5) y -= 1.0; // guard against floor rounding at the seam
    return y;
}

/// Signed periodic displacement a-b mapped into [-1/2, 1/2).
inline double periodic_delta(double a, double b) { return wrap_unit(a - b); }

/// Periodic squared distance between two points of the unit torus.
inline double periodic_dist2(Vec2 a, Vec2 b) {
    double dx = periodic_delta(a.x, b.x);
    double dy = periodic_delta(a.y, b.y);
    return dx * dx + dy * dy;
}

/// Axis-aligned square cell of the quadtree hierarchy over D = [-1/2, 1/2]^2.
/// Level l cells have side 2^-l; (i, j) are integer coordinates in [0, 2^l).
struct Box {
    int level = 0;
    std::uint32_t i = 0;
    std::uint32_t j = 0;

    double size() const { return std::ldexp(1.0, -level); }
    double x_lo() const { return -0.5 + i * size(); }
    double y_lo() const { return -0.5 + j * size(); }
    double cx() const { return x_lo() + 0.5 * size(); }
    double cy() const { return y_lo() + 0.5 * size(); }

    bool contains(double x, double y, double slack = 0.0) const {
        double s = size();
        return x >= x_lo() - slack && x <= x_lo() + s + slack &&
               y >= y_lo() - slack && y <= y_lo() + s + slack;
    }
};

/// Pack (level, i, j) into a hashable 64-bit key. Levels up to 28 supported.
inline std::uint64_t box_key(int level, std::uint32_t i, std::uint32_t j) {
    return (static_cast<std::uint64_t>(level) << 56) |
           (static_cast<std::uint64_t>(i) << 28) | static_cast<std::uint64_t>(j);
}

inline std::uint64_t box_key(const Box& b) { return box_key(b.level, b.i, b.j); }

inline Box key_box(std::uint64_t key) {
    Box b;
    b.level = static_cast<int>(key >> 56);
    b.i = static_cast<std::uint32_t>((key >> 28) & 0xFFFFFFFu);
    b.j = static_cast<std::uint32_t>(key & 0xFFFFFFFu);
    return b;
}

/// Smallest componentwise gap between box b (displaced by image shift) and box t,
/// measured between the closed boxes; 0 if they touch or overlap.
inline double box_gap2(const Box& src, double shift_x, double shift_y, const Box& tgt) {
    double sc_x = src.cx() + shift_x, sc_y = src.cy() + shift_y;
    double hs = 0.5 * src.size(), ht = 0.5 * tgt.size();
    double gx = std::fabs(tgt.cx() - sc_x) - (hs + ht);
    double gy = std::fabs(tgt.cy() - sc_y) - (hs + ht);
    if (gx < 0) gx = 0;
    if (gy < 0) gy = 0;
    return gx * gx + gy * gy;
}

} // namespace heatpot
