#pragma once

#include <optional>
#include <vector>

namespace beammap::sim {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
};

double dot(Vec2 a, Vec2 b);
double cross(Vec2 a, Vec2 b);
double norm(Vec2 a);
double dist(Vec2 a, Vec2 b);

struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    bool contains(Vec2 p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
};

// Straight reflective obstacle. `coeff` scales the amplitude of the bounced
// path; the segment also blocks any direct path crossing it.
struct Wall {
    Vec2 a, b;
    double coeff = 0.5;
};

struct SegmentHit {
    double t;  // parameter along the first segment
    double u;  // parameter along the second segment
};

// Intersection of segments a0-a1 and b0-b1; nullopt for parallel segments.
std::optional<SegmentHit> segment_intersect(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1);

// True when some wall properly crosses the open segment a-b. Crossings whose
// parameter along a-b lies within `tol` of either endpoint do not count, so a
// segment may start or end on a wall (a reflection point) without being
// blocked by it.
bool segment_blocked(Vec2 a, Vec2 b, const std::vector<Wall>& walls, double tol = 1e-9);

// Mirror image of p across the infinite line through the wall.
Vec2 mirror_point(Vec2 p, const Wall& w);

}  // namespace beammap::sim
