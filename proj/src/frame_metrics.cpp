#include "echonle/frame_metrics.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace echonle {

namespace {

// Reads the next header token of a PGM, skipping whitespace and # comments.
std::string next_token(const std::string& bytes, size_t& pos) {
    while (pos < bytes.size()) {
        char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++pos;
        } else {
            break;
        }
    }
    size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
}

int header_int(const std::string& bytes, size_t& pos, const char* what) {
    std::string tok = next_token(bytes, pos);
    if (tok.empty()) throw Error(ErrorKind::TruncatedData, std::string("missing ") + what);
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw Error(ErrorKind::TruncatedData, std::string("non-numeric ") + what);
    return std::stoi(tok);
}

}  // namespace

GrayFrame load_pgm(const std::string& bytes) {
    size_t pos = 0;
    std::string magic = next_token(bytes, pos);
    if (magic != "P5")
        throw Error(ErrorKind::BadMagic, "expected binary PGM magic P5, got '" + magic + "'");
    GrayFrame f;
    f.width = header_int(bytes, pos, "width");
    f.height = header_int(bytes, pos, "height");
    int maxval = header_int(bytes, pos, "maxval");
    if (f.width <= 0 || f.height <= 0)
        throw Error(ErrorKind::TruncatedData, "non-positive dimensions");
    if (maxval <= 0 || maxval > 255)
        throw Error(ErrorKind::BadMagic, "maxval " + std::to_string(maxval) + " unsupported (≤ 255)");
    ++pos;  // single whitespace byte after maxval
    size_t need = static_cast<size_t>(f.width) * f.height;
    if (bytes.size() < pos + need)
        throw Error(ErrorKind::TruncatedData,
                    "pixel data holds " + std::to_string(bytes.size() - std::min(bytes.size(), pos)) +
                        " bytes, header claims " + std::to_string(need));
    f.pixels.assign(bytes.begin() + static_cast<long>(pos),
                    bytes.begin() + static_cast<long>(pos + need));
    return f;
}

std::string write_pgm(const GrayFrame& frame) {
    std::ostringstream out;
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(frame.pixels.data()),
              static_cast<long>(frame.pixels.size()));
    return out.str();
}

Polygon derive_sector(const GrayFrame& frame, int intensity_floor) {
    if (frame.width <= 0 || frame.height <= 0 || frame.pixels.empty())
        throw Error(ErrorKind::EmptySector, "empty frame");
    std::vector<Vec2> lit;
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            if (frame.at(x, y) > intensity_floor) lit.push_back({double(x), double(y)});
    if (lit.empty())
        throw Error(ErrorKind::EmptySector, "no pixel above intensity floor " +
                                                std::to_string(intensity_floor));
    try {
        return convex_hull(lit);
    } catch (const Error&) {
        throw Error(ErrorKind::EmptySector, "lit pixels are collinear, no sector area");
    }
}

ContrastResult cavity_wall_contrast(const GrayFrame& frame, const ContourFrame& contour,
                                    double band_px) {
    // the band is defined at 112×112 and grows with the frame
    double band = band_px * std::max(frame.width, frame.height) / 112.0;

    double sum_c = 0, sum_w = 0;
    long n_c = 0, n_w = 0;
    for (const Vec2& p : contour.points) {
        if (p.x < 0 || p.y < 0 || p.x > frame.width - 1 || p.y > frame.height - 1)
            throw Error(ErrorKind::OutOfBounds, "contour extends past the image edge");
    }
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            Vec2 p{double(x), double(y)};
            bool inside = point_in_polygon(p, contour.points);
            double d = point_boundary_distance(p, contour.points);
            if (inside && d > band) {
                sum_c += frame.at(x, y);
                ++n_c;
            } else if (!inside && d <= band) {
                sum_w += frame.at(x, y);
                ++n_w;
            }
        }
    }
    if (n_c == 0)
        throw Error(ErrorKind::EmptyRegion, "erosion by " + std::to_string(band) +
                                                " px left no cavity pixels");
    if (n_w == 0) throw Error(ErrorKind::EmptyRegion, "no wall ring pixels inside the frame");

    ContrastResult r;
    r.cavity_mean = sum_c / n_c;
    r.wall_mean = sum_w / n_w;
    if (r.cavity_mean > 1e-6) {
        r.contrast = r.wall_mean / r.cavity_mean;
        r.ratio_mode = true;
    } else {
        r.contrast = r.wall_mean - r.cavity_mean;
        r.ratio_mode = false;
    }
    return r;
}

}  // namespace echonle
