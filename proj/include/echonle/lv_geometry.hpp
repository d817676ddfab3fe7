#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "echonle/contour_io.hpp"

namespace echonle {

struct LongAxis {
    Vec2 apex;
    Vec2 base_mid;    // midpoint of the basal landmarks
    double length;    // px, > 0
    Vec2 direction;   // unit vector apex → base
};

struct VolumePair {
    double edv = 0;  // px³, or mL when spacing is set
    double esv = 0;
};

enum class BulgeClass { Prominent, Mild, None, UndetectedConvexity };
const char* bulge_class_name(BulgeClass c);

struct BulgeResult {
    double score = 0;             // milli-scale: 1000·(1 − depth/axis length)
    double max_defect_depth = 0;  // px, distance contour→hull on the septal wall
    int defect_begin = 0;         // index range [begin, end) on the septal wall
    int defect_end = 0;
    BulgeClass cls = BulgeClass::None;
};

enum class MotionLabel { Normal, Hypokinetic, Dyskinetic };
const char* motion_label_name(MotionLabel l);

struct SegmentEntry {
    int begin = 0;  // point index range [begin, end)
    int end = 0;
    Vec2 mean_displacement;
    Vec2 relative_displacement;  // segment mean − global mean
    MotionLabel label = MotionLabel::Normal;
};

struct SegmentMotion {
    std::array<SegmentEntry, 7> per_segment;
    double basal_vertical = 0;  // px, signed, + toward apex
};

struct ApexMotion {
    double displacement_along_axis = 0;  // px, signed along ED axis direction
    double percent_of_length = 0;        // 100·|displacement|/ED axis length
    bool suspicious = false;
};

struct ShapeRatio {
    double length = 0;     // px
    double mid_width = 0;  // px
    double ratio = 0;      // length / mid_width
};

struct SectorOverlap {
    double intersection_area = 0;  // px²
    double contour_area = 0;       // px²
    double ratio = 0;              // intersection / contour, in [0,1]
};

// All classification thresholds in one configurable bag. JSON I/O below uses
// exactly these field names as keys.
struct Thresholds {
    // bulge score class boundaries, strictly ascending:
    // score < bulge_t1 → undetected_convexity, [t1,t2) → prominent,
    // [t2,t3) → mild, ≥ t3 → none
    double bulge_t1 = 150;
    double bulge_t2 = 300;
    double bulge_t3 = 400;
    // apex translation as % of ED axis length above which foreshortening is
    // suspected
    double apex_percent = 8.0;
    // outward relative displacement below this % of axis length is
    // hypokinetic, above is dyskinetic
    double hypo_percent = 1.0;
    // length/width ratio band considered normal
    double shape_low = 1.5;
    double shape_high = 2.8;
    // minimal visible fraction of the contour inside the sector
    double sector_min_ratio = 0.98;
    // minimal wall/cavity contrast for acceptable image quality
    double contrast_min = 5.0;
    // EF bins: < ef_reduced reduced, < ef_mild mildly reduced,
    // ≤ ef_normal_high normal, above hyperdynamic
    double ef_reduced = 40.0;
    double ef_mild = 50.0;
    double ef_normal_high = 70.0;
    // basal descent and mean global inward excursion minima, % of axis length
    double basal_min_percent = 1.0;
    double global_min_percent = 2.0;
    // project basal motion on the image y axis instead of the long axis
    bool basal_use_image_y = false;
    // which frame contrast is measured on: "ed" or "es"
    std::string contrast_frame = "ed";
    // disk count for volume computation
    int n_disks = 20;
};

Thresholds thresholds_from_json(const std::string& text);
std::string thresholds_to_json(const Thresholds& t);

// Everything measure can say about one cycle; image/sector-dependent fields
// are absent when their inputs are absent. Serialized flat with nulls.
struct AttributeVector {
    std::string video_id;
    double ef_percent = 0;
    double edv = 0;
    double esv = 0;
    bool ed_es_swapped = false;  // inputs arrived in ES,ED order
    BulgeResult bulge;
    ShapeRatio shape;
    ApexMotion apex;
    SegmentMotion segments;
    double basal_percent = 0;   // |basal descent| as % of ED axis length
    double basal_signed = 0;    // signed px, + toward apex
    double global_percent = 0;  // mean inward excursion as % of axis length
    std::optional<SectorOverlap> sector;
    std::optional<double> contrast;       // wall/cavity ratio
    std::optional<bool> contrast_ratio_mode;  // false = difference fallback
};

std::string attribute_vector_to_json(const AttributeVector& v);
// Inverse of attribute_vector_to_json (modulo field order); lets narrate
// consume measure output without recomputing geometry.
AttributeVector attribute_vector_from_json(const std::string& text);

BulgeClass bulge_class_from_name(const std::string& name);
MotionLabel motion_label_from_name(const std::string& name);

// --- Operations ----------------------------------------------------------------

LongAxis long_axis(const ContourFrame& frame);

// Method of disks: V = Σ (π/4)·dᵢ²·(L/n). Station i sits at (i+0.5)·L/n
// from the apex; dᵢ is the total width of the contour's interior along the
// perpendicular at that station (sum of inside intervals, so star-convex
// shapes measure correctly).
double disk_volume(const ContourFrame& frame, int n_disks = 20);

double ejection_fraction(const VolumePair& vols);

// convex_hull lives in geometry.hpp; re-exported by inclusion.

BulgeResult bulge_score(const ContourFrame& frame, const Thresholds& t = {});

// The banding step of bulge_score: score < t1 → undetected_convexity,
// [t1,t2) → prominent, [t2,t3) → mild, ≥ t3 → none.
BulgeClass bulge_class_for_score(double score, const Thresholds& t = {});

SegmentMotion segment_motion(const ContourFrame& ed, const ContourFrame& es,
                             const Thresholds& t = {});

ApexMotion apex_motion(const ContourFrame& ed, const ContourFrame& es,
                       double threshold_percent = 8.0);

ShapeRatio length_width_ratio(const ContourFrame& frame);

SectorOverlap sector_intersection(const ContourFrame& frame, const Polygon& sector);

// Orchestration: orders ED/ES, computes every contour-only attribute, adds
// sector overlap when a sector polygon is given (or derivable from an
// attached image when config requests it) and contrast when images exist.
AttributeVector compute_attribute_vector(const CardiacCycle& cycle,
                                         const std::optional<Polygon>& sector,
                                         const Thresholds& config = {});

// Segment partition helper, exposed for the partition invariants: 7
// contiguous [begin, end) ranges covering [0, n), middle range centered on
// apex_index with balanced sizes.
std::array<std::pair<int, int>, 7> partition_segments(int n_points, int apex_index);

}  // namespace echonle
