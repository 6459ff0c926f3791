#include "beammap/sim/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace beammap::sim {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }
double dist(Vec2 a, Vec2 b) { return norm(a - b); }

std::optional<SegmentHit> segment_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1) {
    const Vec2 da = a1 - a0, db = b1 - b0;
    const double denom = cross(da, db);
    if (denom == 0.0) return std::nullopt;
    const Vec2 d0 = b0 - a0;
    const double t = cross(d0, db) / denom;
    const double u = cross(d0, da) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return SegmentHit{t, u};
}

bool segment_blocked(Vec2 a, Vec2 b, const std::vector<Wall>& walls, double tol) {
    for (const Wall& w : walls) {
        auto hit = segment_intersect(a, b, w.a, w.b);
        if (hit && hit->t > tol && hit->t < 1.0 - tol) return true;
    }
    return false;
}

Vec2 mirror_point(Vec2 p, const Wall& w) {
    const Vec2 d = w.b - w.a;
    const double len2 = dot(d, d);
    if (len2 == 0.0) throw std::invalid_argument("mirror_point: degenerate wall segment");
    const double s = dot(p - w.a, d) / len2;
    const Vec2 proj = w.a + d * s;
    return proj * 2.0 - p;
}

}  // namespace beammap::sim
