#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace rtwin {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2&) const = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }

// Signed area (positive for counter-clockwise winding).
inline double polygon_signed_area(const std::vector<Vec2>& poly) {
    double a = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += cross(p, q);
    }
    return 0.5 * a;
}

inline double polygon_area(const std::vector<Vec2>& poly) {
    return std::abs(polygon_signed_area(poly));
}

// Proper segment intersection (interiors cross). Shared endpoints of
// adjacent polygon edges do not count.
inline bool segments_properly_intersect(const Vec2& a, const Vec2& b,
                                        const Vec2& c, const Vec2& d) {
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 &&
           d3 != 0 && d4 != 0;
}

// Simple = no two non-adjacent edges intersect and no zero-length edges.
inline bool is_simple_polygon(const std::vector<Vec2>& poly) {
    const std::size_t n = poly.size();
    if (n < 3)
        return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (poly[i] == poly[(i + 1) % n])
            return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent)
                continue;
            if (segments_properly_intersect(poly[i], poly[(i + 1) % n], poly[j],
                                            poly[(j + 1) % n]))
                return false;
        }
    }
    return polygon_area(poly) > 0.0;
}

// Winding-number point-in-polygon test; boundary points count as inside.
inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
    int winding = 0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        if (a.y <= p.y) {
            if (b.y > p.y && cross(b - a, p - a) > 0)
                ++winding;
        } else {
            if (b.y <= p.y && cross(b - a, p - a) < 0)
                --winding;
        }
    }
    if (winding != 0)
        return true;
    // Boundary check: p collinear with and between a and b.
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        if (cross(b - a, p - a) == 0 && dot(p - a, p - b) <= 0)
            return true;
    }
    return false;
}

// Distance from point to segment.
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0)
        return norm(p - a);
    double t = dot(p - a, ab) / len2;
    t = std::fmax(0.0, std::fmin(1.0, t));
    return norm(p - (a + ab * t));
}

}  // namespace rtwin
