#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace echonle {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    bool operator==(const Vec2&) const = default;

    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const;  // zero vector stays zero
};

using Polygon = std::vector<Vec2>;

// Shoelace area; positive when vertices wind counter-clockwise in a y-up
// frame (equivalently clockwise on image coordinates where y grows down).
double polygon_signed_area(const Polygon& poly);
double polygon_area(const Polygon& poly);

// Arithmetic mean of the vertices. Contour points are roughly evenly spaced,
// so this is a stable interior reference point for radial directions.
Vec2 polygon_vertex_mean(const Polygon& poly);

// True when no two non-adjacent edges intersect (O(n^2) exact-ish test with
// a small epsilon for touching endpoints).
bool polygon_is_simple(const Polygon& poly);

// Even-odd rule; points on the boundary may land on either side.
bool point_in_polygon(Vec2 p, const Polygon& poly);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
// Distance from p to the closed boundary polyline of poly.
double point_boundary_distance(Vec2 p, const Polygon& poly);

// Andrew monotone chain. Output is counter-clockwise (positive signed area)
// without repeated first vertex. Throws Error{Collinear} when all input
// points lie on one line (no 2D hull exists).
Polygon convex_hull(std::vector<Vec2> pts);

// Sutherland-Hodgman clip of an arbitrary simple subject polygon against a
// convex clip polygon. Both are normalised to positive orientation first.
// The result ring may contain coincident bridge edges for non-convex
// subjects; its signed area still equals the intersection area.
Polygon clip_convex(const Polygon& subject, const Polygon& convex_clip);

// Ear-clipping triangulation of a simple polygon (any orientation).
std::vector<std::array<Vec2, 3>> triangulate(const Polygon& poly);

// Area of subject ∩ clip for simple polygons: the clip polygon is
// triangulated and the subject is clipped against each triangle.
double intersection_area(const Polygon& subject, const Polygon& clip);

}  // namespace echonle
