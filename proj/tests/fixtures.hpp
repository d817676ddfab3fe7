// Analytic contour fixtures shared by the unit and acceptance tests.
#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "echonle/contour_io.hpp"

namespace fixtures {

constexpr double kPi = 3.14159265358979323846;

// Truncated ellipse: open base, 40 points spanning ±150° around the long
// axis, apex at the top. Canonical ordering by construction (starts at
// basal_left, septal wall first).
inline echonle::ContourFrame ellipse_frame(double b, double a = 45.0, double cx = 100.0,
                                           double cy = 100.0, int frame_index = 0, int n = 40) {
    echonle::ContourFrame f;
    for (int k = 0; k < n; ++k) {
        double th = (-150.0 + 300.0 * k / (n - 1)) * kPi / 180.0;
        f.points.push_back({cx + b * std::sin(th), cy - a * std::cos(th)});
    }
    f.apex = {cx, cy - a};
    f.basal_left = f.points.front();
    f.basal_right = f.points.back();
    f.frame_index = frame_index;
    return f;
}

// Closed ellipse: 40 points all the way around (none exactly at the bottom),
// for analytic-volume comparisons against the prolate spheroid.
inline echonle::ContourFrame full_ellipse_frame(double b = 20.0, double a = 45.0,
                                                double cx = 100.0, double cy = 100.0,
                                                int frame_index = 0, int n = 40) {
    echonle::ContourFrame f;
    for (int k = 0; k < n; ++k) {
        double th = (-180.0 + 360.0 * (k + 0.5) / n) * kPi / 180.0;
        f.points.push_back({cx + b * std::sin(th), cy - a * std::cos(th)});
    }
    f.apex = {cx, cy - a};
    f.basal_left = f.points.front();
    f.basal_right = f.points.back();
    f.frame_index = frame_index;
    return f;
}

// Circle with the apex exactly on a vertex; index k=0 is the bottom point.
inline echonle::ContourFrame circle_frame(double r = 50.0, double cx = 100.0, double cy = 100.0,
                                          int frame_index = 0, int n = 40) {
    echonle::ContourFrame f;
    for (int k = 0; k < n; ++k) {
        double th = (-180.0 + 360.0 * k / n) * kPi / 180.0;
        f.points.push_back({cx + r * std::sin(th), cy - r * std::cos(th)});
    }
    f.apex = {cx, cy - r};
    f.basal_left = f.points[1];
    f.basal_right = f.points.back();
    f.frame_index = frame_index;
    return f;
}

// Bullet: semicircular cap on a rectangle, total length exactly twice the
// width, so the length-to-width ratio is 2 by construction.
inline echonle::ContourFrame bullet_frame(double radius = 25.0, double cx = 100.0,
                                          double apex_y = 45.0, int frame_index = 0) {
    echonle::ContourFrame f;
    double cap_cy = apex_y + radius;           // cap center
    double base_y = apex_y + 4.0 * radius;     // total length 4r = 2·(2r)
    // left wall bottom → top
    for (int k = 0; k < 8; ++k) {
        double y = base_y - (base_y - cap_cy) * k / 8.0;
        f.points.push_back({cx - radius, y});
    }
    // cap, left to right
    for (int k = 0; k <= 16; ++k) {
        double th = (-90.0 + 180.0 * k / 16.0) * kPi / 180.0;
        f.points.push_back({cx + radius * std::sin(th), cap_cy - radius * std::cos(th)});
    }
    // right wall top → bottom
    for (int k = 1; k <= 8; ++k) {
        double y = cap_cy + (base_y - cap_cy) * k / 8.0;
        f.points.push_back({cx + radius, y});
    }
    f.apex = {cx, apex_y};
    f.basal_left = {cx - radius, base_y};
    f.basal_right = {cx + radius, base_y};
    f.frame_index = frame_index;
    return f;
}

// EchoNet-style VolumeTracings CSV for an ellipse: long-axis row first, then
// 20 chords. First and last chords sit 1 px inside the poles so the apex
// stays within the boundary tolerance.
inline std::string ellipse_tracings_csv(const std::string& video, int frame, double b = 20.0,
                                        double a = 45.0, double cx = 100.0, double cy = 100.0) {
    char row[160];
    std::string csv;
    std::snprintf(row, sizeof row, "%s,%.4f,%.4f,%.4f,%.4f,%d\n", video.c_str(), cx, cy - a, cx,
                  cy + a, frame);
    csv += row;
    for (int j = 0; j < 20; ++j) {
        double y = (cy - a + 1.0) + (2.0 * a - 2.0) * j / 19.0;
        double rel = (y - cy) / a;
        double w = b * std::sqrt(std::max(0.0, 1.0 - rel * rel));
        std::snprintf(row, sizeof row, "%s,%.4f,%.4f,%.4f,%.4f,%d\n", video.c_str(), cx - w, y,
                      cx + w, y, frame);
        csv += row;
    }
    return csv;
}

inline std::string tracings_header() { return "FileName,X1,Y1,X2,Y2,Frame\n"; }

inline echonle::CardiacCycle ellipse_cycle(double b_ed = 20.0, double b_es = 14.0) {
    echonle::CardiacCycle c;
    c.video_id = "fixture";
    c.ed = ellipse_frame(b_ed, 45.0, 100.0, 100.0, 0);
    c.es = ellipse_frame(b_es, 45.0, 100.0, 100.0, 10);
    return c;
}

}  // namespace fixtures
