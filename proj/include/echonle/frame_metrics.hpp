#pragma once

#include <cstdint>
#include <string>

#include "echonle/contour_io.hpp"
#include "echonle/gray_frame.hpp"

namespace echonle {

struct ContrastResult {
    double cavity_mean = 0;
    double wall_mean = 0;
    double contrast = 0;
    bool ratio_mode = true;  // false: cavity_mean ~ 0, difference reported instead
};

// Binary PGM (P5), maxval ≤ 255. Comments (#...) in the header are honored.
GrayFrame load_pgm(const std::string& bytes);
std::string write_pgm(const GrayFrame& frame);

// Convex hull of every pixel center with intensity > intensity_floor; the
// geometric stand-in for the ultrasound sector outline.
Polygon derive_sector(const GrayFrame& frame, int intensity_floor = 2);

// cavity mean over pixels deeper than band_px inside the contour; wall mean
// over the ring within band_px outside it. band_px is defined at 112×112
// resolution and scales with the frame size. Contrast = wall/cavity when the
// cavity mean is above ε, otherwise the difference with ratio_mode = false.
ContrastResult cavity_wall_contrast(const GrayFrame& frame, const ContourFrame& contour,
                                    double band_px = 4.0);

}  // namespace echonle
