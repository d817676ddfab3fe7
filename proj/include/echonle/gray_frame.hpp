#pragma once

#include <cstdint>
#include <vector>

namespace echonle {

// 8-bit grayscale image, row-major.
struct GrayFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    bool operator==(const GrayFrame&) const = default;
};

}  // namespace echonle
