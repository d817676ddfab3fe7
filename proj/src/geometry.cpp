#include "echonle/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "echonle/error.hpp"

namespace echonle {

namespace {

constexpr double kEps = 1e-9;

// Orientation of c relative to the directed line a→b: >0 left, <0 right.
double orient(Vec2 a, Vec2 b, Vec2 c) { return (b - a).cross(c - a); }

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
    return std::abs(orient(a, b, p)) <= kEps &&
           p.x >= std::min(a.x, b.x) - kEps && p.x <= std::max(a.x, b.x) + kEps &&
           p.y >= std::min(a.y, b.y) - kEps && p.y <= std::max(a.y, b.y) + kEps;
}

// Proper or improper intersection of closed segments [a,b] and [c,d].
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    double d1 = orient(c, d, a), d2 = orient(c, d, b);
    double d3 = orient(a, b, c), d4 = orient(a, b, d);
    if (((d1 > kEps && d2 < -kEps) || (d1 < -kEps && d2 > kEps)) &&
        ((d3 > kEps && d4 < -kEps) || (d3 < -kEps && d4 > kEps)))
        return true;
    return on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) ||
           on_segment(a, b, d);
}

Polygon oriented_positive(Polygon poly) {
    if (polygon_signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
    return poly;
}

}  // namespace

Vec2 Vec2::normalized() const {
    double n = norm();
    return n > 0 ? Vec2{x / n, y / n} : Vec2{};
}

double polygon_signed_area(const Polygon& poly) {
    double s = 0;
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        s += a.cross(b);
    }
    return s / 2.0;
}

double polygon_area(const Polygon& poly) { return std::abs(polygon_signed_area(poly)); }

Vec2 polygon_vertex_mean(const Polygon& poly) {
    Vec2 m;
    for (const Vec2& p : poly) m = m + p;
    return poly.empty() ? m : m / static_cast<double>(poly.size());
}

bool polygon_is_simple(const Polygon& poly) {
    size_t n = poly.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        Vec2 a = poly[i], b = poly[(i + 1) % n];
        if ((b - a).norm() <= kEps) return false;  // zero-length edge
        for (size_t j = i + 1; j < n; ++j) {
            // skip adjacent edges (shared endpoint is not a crossing)
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            Vec2 c = poly[j], d = poly[(j + 1) % n];
            if (segments_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

bool point_in_polygon(Vec2 p, const Polygon& poly) {
    // even-odd crossing count with the half-open edge rule
    bool inside = false;
    size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            double x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len2 = ab.dot(ab);
    if (len2 <= 0) return (p - a).norm();
    double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

double point_boundary_distance(Vec2 p, const Polygon& poly) {
    double best = std::numeric_limits<double>::infinity();
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    return best;
}

Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    size_t n = pts.size();
    if (n < 3) throw Error(ErrorKind::Collinear, "fewer than 3 distinct points");

    std::vector<Vec2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && orient(hull[k - 2], hull[k - 1], pts[i]) <= kEps) --k;
        hull[k++] = pts[i];
    }
    size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {  // upper chain
        while (k >= lower && orient(hull[k - 2], hull[k - 1], pts[i]) <= kEps) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    if (hull.size() < 3) throw Error(ErrorKind::Collinear, "all points collinear");
    return hull;
}

Polygon clip_convex(const Polygon& subject, const Polygon& convex_clip) {
    Polygon clip = oriented_positive(convex_clip);
    Polygon out = oriented_positive(subject);
    size_t m = clip.size();
    for (size_t e = 0; e < m && !out.empty(); ++e) {
        Vec2 a = clip[e], b = clip[(e + 1) % m];
        Polygon in;
        in.swap(out);
        size_t n = in.size();
        for (size_t i = 0; i < n; ++i) {
            Vec2 cur = in[i], nxt = in[(i + 1) % n];
            double dc = orient(a, b, cur), dn = orient(a, b, nxt);
            if (dc >= -kEps) out.push_back(cur);
            if ((dc > kEps && dn < -kEps) || (dc < -kEps && dn > kEps)) {
                double t = dc / (dc - dn);
                out.push_back(cur + (nxt - cur) * t);
            }
        }
    }
    return out;
}

std::vector<std::array<Vec2, 3>> triangulate(const Polygon& poly) {
    Polygon ring = oriented_positive(poly);
    std::vector<std::array<Vec2, 3>> tris;
    if (ring.size() < 3) return tris;
    std::vector<size_t> idx(ring.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    auto is_ear = [&](size_t ia, size_t ib, size_t ic) {
        Vec2 a = ring[ia], b = ring[ib], c = ring[ic];
        if (orient(a, b, c) <= kEps) return false;  // reflex or degenerate corner
        for (size_t j : idx) {
            if (j == ia || j == ib || j == ic) continue;
            Vec2 p = ring[j];
            if (orient(a, b, p) > -kEps && orient(b, c, p) > -kEps && orient(c, a, p) > -kEps)
                return false;
        }
        return true;
    };

    size_t guard = 0;
    while (idx.size() > 3) {
        bool clipped = false;
        for (size_t i = 0; i < idx.size(); ++i) {
            size_t ia = idx[(i + idx.size() - 1) % idx.size()];
            size_t ib = idx[i];
            size_t ic = idx[(i + 1) % idx.size()];
            if (is_ear(ia, ib, ic)) {
                tris.push_back({ring[ia], ring[ib], ring[ic]});
                idx.erase(idx.begin() + static_cast<long>(i));
                clipped = true;
                break;
            }
        }
        if (!clipped) {
            // numerically stuck (nearly collinear ring): drop the flattest corner
            if (++guard > ring.size()) break;
            size_t flattest = 0;
            double best = std::numeric_limits<double>::infinity();
            for (size_t i = 0; i < idx.size(); ++i) {
                size_t ia = idx[(i + idx.size() - 1) % idx.size()];
                size_t ic = idx[(i + 1) % idx.size()];
                double a = std::abs(orient(ring[ia], ring[idx[i]], ring[ic]));
                if (a < best) best = a, flattest = i;
            }
            idx.erase(idx.begin() + static_cast<long>(flattest));
        }
    }
    if (idx.size() == 3) tris.push_back({ring[idx[0]], ring[idx[1]], ring[idx[2]]});
    return tris;
}

double intersection_area(const Polygon& subject, const Polygon& clip) {
    double total = 0;
    for (const auto& tri : triangulate(clip)) {
        Polygon t{tri[0], tri[1], tri[2]};
        Polygon piece = clip_convex(subject, t);
        if (piece.size() >= 3) total += std::max(0.0, polygon_signed_area(piece));
    }
    return total;
}

}  // namespace echonle
