#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "echonle/frame_metrics.hpp"
#include "fixtures.hpp"

using namespace echonle;

namespace {

GrayFrame solid(int w, int h, std::uint8_t value) {
    GrayFrame f;
    f.width = w;
    f.height = h;
    f.pixels.assign(static_cast<size_t>(w) * h, value);
    return f;
}

void paint_inside(GrayFrame& f, const Polygon& poly, std::uint8_t value) {
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            if (point_in_polygon({double(x), double(y)}, poly))
                f.pixels[static_cast<size_t>(y) * f.width + x] = value;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    throw std::logic_error("expected an Error");
}

}  // namespace

TEST_CASE("load_pgm parses binary PGM with comments") {
    std::string bytes = "P5 # magic\n# a comment line\n3 2\n# another\n255\n";
    bytes += std::string({0, 10, 20, 30, 40, 50});
    GrayFrame f = load_pgm(bytes);
    CHECK(f.width == 3);
    CHECK(f.height == 2);
    REQUIRE(f.pixels.size() == 6);
    CHECK(f.at(0, 0) == 0);
    CHECK(f.at(2, 1) == 50);

    SUBCASE("trailing bytes beyond the pixel block are ignored") {
        GrayFrame g = load_pgm(bytes + "junk");
        CHECK(g == f);
    }
}

TEST_CASE("load_pgm rejects malformed input") {
    CHECK(kind_of([] { load_pgm("P2\n2 2\n255\n1 2 3 4"); }) == ErrorKind::BadMagic);
    CHECK(kind_of([] { load_pgm(""); }) == ErrorKind::BadMagic);
    CHECK(kind_of([] { load_pgm("P5\n2 2\n255\nab"); }) == ErrorKind::TruncatedData);
    CHECK(kind_of([] { load_pgm("P5\n2 2\n"); }) == ErrorKind::TruncatedData);
    CHECK(kind_of([] { load_pgm("P5\n2 x\n255\nabcd"); }) == ErrorKind::TruncatedData);
    CHECK(kind_of([] { load_pgm("P5\n0 2\n255\n"); }) == ErrorKind::TruncatedData);
    // 16-bit data is out of scope
    std::string deep = "P5\n1 1\n65535\n";
    deep += std::string(2, '\0');
    CHECK(kind_of([deep] { load_pgm(deep); }) == ErrorKind::BadMagic);
}

TEST_CASE("write_pgm and load_pgm round trip") {
    std::mt19937 rng(7);
    GrayFrame f = solid(17, 9, 0);
    for (auto& px : f.pixels) px = static_cast<std::uint8_t>(rng() & 0xff);
    GrayFrame back = load_pgm(write_pgm(f));
    CHECK(back == f);
}

TEST_CASE("derive_sector hulls every lit pixel") {
    GrayFrame f = solid(64, 64, 0);
    // a fan: apex at the top middle, widening downward
    for (int y = 8; y < 56; ++y) {
        int half = (y - 8) * 3 / 5 + 1;
        for (int x = 32 - half; x <= 32 + half; ++x)
            f.pixels[static_cast<size_t>(y) * 64 + x] = 180;
    }
    Polygon sector = derive_sector(f, 2);
    REQUIRE(sector.size() >= 3);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (f.at(x, y) > 2) {
                Vec2 p{double(x), double(y)};
                bool covered = point_in_polygon(p, sector) ||
                               point_boundary_distance(p, sector) < 1e-9;
                CHECK(covered);
            }

    SUBCASE("floor excludes dim noise") {
        f.pixels[3] = 2;  // at the very corner, at the floor → not lit
        Polygon again = derive_sector(f, 2);
        CHECK(polygon_area(again) == doctest::Approx(polygon_area(sector)));
    }
    SUBCASE("dark frame has no sector") {
        CHECK(kind_of([] { derive_sector(solid(8, 8, 0), 2); }) == ErrorKind::EmptySector);
    }
    SUBCASE("single lit line has no area") {
        GrayFrame g = solid(8, 8, 0);
        for (int x = 0; x < 8; ++x) g.pixels[3 * 8 + x] = 99;
        CHECK(kind_of([g] { derive_sector(g, 2); }) == ErrorKind::EmptySector);
    }
}

TEST_CASE("cavity_wall_contrast ratio on a clean phantom") {
    // 112×112 so the band is exactly 4 px wide
    GrayFrame f = solid(112, 112, 119);
    ContourFrame c = fixtures::circle_frame(30.0, 56.0, 56.0);
    paint_inside(f, c.points, 25);

    ContrastResult r = cavity_wall_contrast(f, c, 4.0);
    CHECK(r.ratio_mode);
    CHECK(r.cavity_mean == doctest::Approx(25.0));
    CHECK(r.wall_mean == doctest::Approx(119.0));
    CHECK(r.contrast == doctest::Approx(119.0 / 25.0));
    CHECK(r.contrast < 5.0);  // reads as reduced quality under the default floor

    SUBCASE("band width scales with the frame resolution") {
        // same geometry at 224×224: the ring reaches 8 px out
        GrayFrame big = solid(224, 224, 119);
        ContourFrame c2 = fixtures::circle_frame(60.0, 112.0, 112.0);
        paint_inside(big, c2.points, 25);
        ContrastResult r2 = cavity_wall_contrast(big, c2, 4.0);
        CHECK(r2.contrast == doctest::Approx(119.0 / 25.0));
    }
}

TEST_CASE("cavity_wall_contrast difference fallback for a black cavity") {
    GrayFrame f = solid(112, 112, 119);
    ContourFrame c = fixtures::circle_frame(30.0, 56.0, 56.0);
    paint_inside(f, c.points, 0);
    ContrastResult r = cavity_wall_contrast(f, c, 4.0);
    CHECK_FALSE(r.ratio_mode);
    CHECK(r.cavity_mean == doctest::Approx(0.0));
    CHECK(r.contrast == doctest::Approx(119.0));
}

TEST_CASE("cavity_wall_contrast failure modes") {
    SUBCASE("contour outside the frame") {
        GrayFrame f = solid(64, 64, 100);
        ContourFrame c = fixtures::circle_frame(30.0, 56.0, 56.0);  // spills past 64
        CHECK(kind_of([&] { cavity_wall_contrast(f, c, 4.0); }) == ErrorKind::OutOfBounds);
    }
    SUBCASE("contour too small to survive the erosion") {
        GrayFrame f = solid(112, 112, 100);
        ContourFrame c = fixtures::circle_frame(3.0, 56.0, 56.0);  // radius < band
        CHECK(kind_of([&] { cavity_wall_contrast(f, c, 4.0); }) == ErrorKind::EmptyRegion);
    }
}
