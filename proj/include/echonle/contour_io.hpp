#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "echonle/error.hpp"
#include "echonle/geometry.hpp"
#include "echonle/gray_frame.hpp"

namespace echonle {

// One row of an EchoNet-style VolumeTracings CSV.
struct TracingRecord {
    std::string file_name;
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    int frame = 0;
};

// A traced wall contour plus landmarks, in image pixel coordinates
// (x right, y down). Contours are stored in canonical order: start at the
// point nearest basal_left, walk the septal (left) wall to the apex first,
// i.e. counter-clockwise as displayed.
struct ContourFrame {
    std::vector<Vec2> points;
    Vec2 apex;
    Vec2 basal_left;
    Vec2 basal_right;
    int frame_index = 0;
    double spacing = 1.0;  // mm per pixel; 1.0 = unitless pixel mode

    bool operator==(const ContourFrame&) const = default;
};

struct ReferenceValues {
    double ef = 0, edv = 0, esv = 0;
    bool operator==(const ReferenceValues&) const = default;
};

struct CardiacCycle {
    std::string video_id;
    ContourFrame ed;
    ContourFrame es;
    std::map<int, GrayFrame> frames;  // optional, keyed by frame index
    std::optional<ReferenceValues> reference;
};

enum class CycleFormat { NativeJson, Echonet };

// --- EchoNet CSV ingestion ---------------------------------------------------

// Header `FileName,X1,Y1,X2,Y2,Frame`; groups rows by file then frame,
// keeping the original row order inside each group.
std::map<std::string, std::map<int, std::vector<TracingRecord>>>
parse_volume_tracings(const std::string& text);

// Header beginning `FileName,EF,ESV,EDV`; extra columns ignored.
std::map<std::string, ReferenceValues> parse_filelist(const std::string& text);

// Builds a contour from one frame's tracing group. The first record is the
// long-axis line (point 1 = apex); the remaining records are cross-sectional
// chords. Chord endpoints are assembled into a closed contour, basal
// landmarks are the endpoints of the most-basal chord, and the result is
// canonicalized.
ContourFrame tracing_to_contour(const std::vector<TracingRecord>& records);

// --- Canonical ordering -------------------------------------------------------

// Rotates/reverses the point ring so it starts at the point nearest
// basal_left and reaches the apex before basal_right (septal wall first).
// Idempotent. Also validates the ContourFrame invariants.
ContourFrame canonicalize(ContourFrame frame);

// Validation used by canonicalize and parse_cycle: simple polygon, positive
// area, apex within 2 px of the boundary. Throws on violation.
void validate_frame(const ContourFrame& frame);

// --- Cycle documents ----------------------------------------------------------

// Native JSON cycle document or a single-video two-frame EchoNet tracing CSV.
CardiacCycle parse_cycle(const std::string& text, CycleFormat format);

// Serializes a cycle to the native JSON document (alphabetically ordered
// keys, so serialize∘parse∘serialize is byte-stable). Images are not part
// of the document and are dropped.
std::string cycle_to_json(const CardiacCycle& cycle);

// Returns (ed, es) with volume(ed) ≥ volume(es); ties keep input order.
std::pair<ContourFrame, ContourFrame> order_ed_es(const ContourFrame& a,
                                                  const ContourFrame& b);

}  // namespace echonle
