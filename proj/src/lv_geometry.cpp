#include "echonle/lv_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "echonle/frame_metrics.hpp"

namespace echonle {

namespace {

using nlohmann::json;

// Total interior width of the polygon along the perpendicular at a station
// `t` px from the apex along the axis (sum of inside intervals, so
// star-convex shapes measure correctly). Returns 0 when the line misses the
// polygon.
double width_at_station(const std::vector<Vec2>& pts, const LongAxis& axis, double t) {
    Vec2 u{-axis.direction.y, axis.direction.x};  // perpendicular
    std::vector<double> ws;
    size_t n = pts.size();
    for (size_t i = 0; i < n; ++i) {
        Vec2 a = pts[i] - axis.apex;
        Vec2 b = pts[(i + 1) % n] - axis.apex;
        double sa = a.dot(axis.direction), sb = b.dot(axis.direction);
        if ((sa > t) != (sb > t)) {
            double f = (t - sa) / (sb - sa);
            ws.push_back(a.dot(u) + f * (b.dot(u) - a.dot(u)));
        }
    }
    std::sort(ws.begin(), ws.end());
    double width = 0;
    for (size_t i = 0; i + 1 < ws.size(); i += 2) width += ws[i + 1] - ws[i];
    return width;
}

size_t nearest_index(const std::vector<Vec2>& pts, Vec2 target) {
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pts.size(); ++i) {
        double d = (pts[i] - target).norm();
        if (d < best_d) best_d = d, best = i;
    }
    return best;
}

// Split [lo, hi) into k contiguous near-equal ranges.
void split_range(int lo, int hi, int k, std::vector<std::pair<int, int>>& out) {
    int len = hi - lo, base = len / k, extra = len % k;
    int cur = lo;
    for (int i = 0; i < k; ++i) {
        int size = base + (i < extra ? 1 : 0);
        out.push_back({cur, cur + size});
        cur += size;
    }
}

json vec_json(const Vec2& v) { return json::array({v.x, v.y}); }

}  // namespace

const char* bulge_class_name(BulgeClass c) {
    switch (c) {
        case BulgeClass::Prominent: return "prominent";
        case BulgeClass::Mild: return "mild";
        case BulgeClass::None: return "none";
        case BulgeClass::UndetectedConvexity: return "undetected_convexity";
    }
    return "?";
}

const char* motion_label_name(MotionLabel l) {
    switch (l) {
        case MotionLabel::Normal: return "normal";
        case MotionLabel::Hypokinetic: return "hypokinetic";
        case MotionLabel::Dyskinetic: return "dyskinetic";
    }
    return "?";
}

LongAxis long_axis(const ContourFrame& frame) {
    LongAxis axis;
    axis.apex = frame.apex;
    axis.base_mid = (frame.basal_left + frame.basal_right) / 2.0;
    axis.length = (axis.base_mid - axis.apex).norm();
    if (axis.length < 1.0)
        throw Error(ErrorKind::DegenerateAxis,
                    "long-axis length " + std::to_string(axis.length) + " px < 1 px");
    axis.direction = (axis.base_mid - axis.apex) / axis.length;
    return axis;
}

double disk_volume(const ContourFrame& frame, int n_disks) {
    if (n_disks < 4) throw std::invalid_argument("disk_volume: n_disks must be ≥ 4");
    LongAxis axis = long_axis(frame);
    double h = axis.length / n_disks;
    double volume = 0;
    for (int i = 0; i < n_disks; ++i) {
        double t = (i + 0.5) * h;
        double d = width_at_station(frame.points, axis, t);
        if (d <= 0)
            throw Error(ErrorKind::NonPositiveWidth,
                        "contour does not span disk station " + std::to_string(i));
        volume += std::numbers::pi / 4.0 * d * d * h;
    }
    return volume;
}

double ejection_fraction(const VolumePair& vols) {
    if (!(vols.edv > 0))
        throw Error(ErrorKind::NonPositiveEDV, "EDV must be > 0, got " + std::to_string(vols.edv));
    return 100.0 * (vols.edv - vols.esv) / vols.edv;
}

BulgeResult bulge_score(const ContourFrame& frame, const Thresholds& t) {
    if (!(t.bulge_t1 < t.bulge_t2 && t.bulge_t2 < t.bulge_t3))
        throw std::invalid_argument("bulge thresholds must be strictly ascending");
    LongAxis axis = long_axis(frame);
    Polygon hull = convex_hull(frame.points);

    // septal wall = canonical start (basal_left) up to the apex point
    size_t apex_idx = nearest_index(frame.points, frame.apex);
    BulgeResult r;
    std::vector<double> depth(apex_idx + 1, 0.0);
    size_t deepest = 0;
    for (size_t i = 0; i <= apex_idx; ++i) {
        depth[i] = point_boundary_distance(frame.points[i], hull);
        if (depth[i] > r.max_defect_depth) r.max_defect_depth = depth[i], deepest = i;
    }

    if (r.max_defect_depth > 1e-9) {
        // defect extent: contiguous run around the deepest point that stays
        // above a quarter of the peak depth
        double floor_depth = std::max(0.1, r.max_defect_depth / 4.0);
        size_t b = deepest, e = deepest;
        while (b > 0 && depth[b - 1] > floor_depth) --b;
        while (e + 1 <= apex_idx && depth[e + 1] > floor_depth) ++e;
        r.defect_begin = static_cast<int>(b);
        r.defect_end = static_cast<int>(e + 1);
    }

    r.score = std::max(0.0, 1000.0 * (1.0 - r.max_defect_depth / axis.length));
    r.cls = bulge_class_for_score(r.score, t);
    return r;
}

BulgeClass bulge_class_for_score(double score, const Thresholds& t) {
    if (!(t.bulge_t1 < t.bulge_t2 && t.bulge_t2 < t.bulge_t3))
        throw std::invalid_argument("bulge thresholds must be strictly ascending");
    if (score < t.bulge_t1) return BulgeClass::UndetectedConvexity;
    if (score < t.bulge_t2) return BulgeClass::Prominent;
    if (score < t.bulge_t3) return BulgeClass::Mild;
    return BulgeClass::None;
}

std::array<std::pair<int, int>, 7> partition_segments(int n_points, int apex_index) {
    if (n_points < 7) throw std::invalid_argument("partition_segments: need ≥ 7 points");
    if (apex_index < 0 || apex_index >= n_points)
        throw std::invalid_argument("partition_segments: apex index out of range");

    int mid_size = std::max(1, n_points / 7);
    int start = std::clamp(apex_index - mid_size / 2, 3, n_points - mid_size - 3);

    std::vector<std::pair<int, int>> ranges;
    split_range(0, start, 3, ranges);
    ranges.push_back({start, start + mid_size});
    split_range(start + mid_size, n_points, 3, ranges);

    std::array<std::pair<int, int>, 7> out;
    std::copy_n(ranges.begin(), 7, out.begin());
    return out;
}

SegmentMotion segment_motion(const ContourFrame& ed, const ContourFrame& es,
                             const Thresholds& t) {
    if (ed.points.size() != es.points.size())
        throw Error(ErrorKind::PointCountMismatch,
                    "ED has " + std::to_string(ed.points.size()) + " points, ES has " +
                        std::to_string(es.points.size()));
    int n = static_cast<int>(ed.points.size());
    LongAxis axis = long_axis(ed);
    double hypo_abs = t.hypo_percent / 100.0 * axis.length;

    std::vector<Vec2> disp(n);
    Vec2 global;
    for (int i = 0; i < n; ++i) {
        disp[i] = es.points[i] - ed.points[i];
        global = global + disp[i];
    }
    global = global / n;
    Vec2 center = polygon_vertex_mean(ed.points);

    SegmentMotion m;
    auto ranges = partition_segments(n, static_cast<int>(nearest_index(ed.points, ed.apex)));
    for (int s = 0; s < 7; ++s) {
        auto [b, e] = ranges[s];
        SegmentEntry& entry = m.per_segment[s];
        entry.begin = b;
        entry.end = e;
        Vec2 mean, seg_center;
        for (int i = b; i < e; ++i) {
            mean = mean + disp[i];
            seg_center = seg_center + ed.points[i];
        }
        mean = mean / (e - b);
        seg_center = seg_center / (e - b);
        entry.mean_displacement = mean;
        entry.relative_displacement = mean - global;
        Vec2 outward = (seg_center - center).normalized();
        double inward = -entry.relative_displacement.dot(outward);
        if (inward >= -1e-12) entry.label = MotionLabel::Normal;
        else if (-inward < hypo_abs) entry.label = MotionLabel::Hypokinetic;
        else entry.label = MotionLabel::Dyskinetic;
    }

    Vec2 basal_mean = ((es.basal_left - ed.basal_left) + (es.basal_right - ed.basal_right)) / 2.0;
    // + toward the apex: up the long axis, or up the image when configured
    m.basal_vertical = t.basal_use_image_y ? -basal_mean.y : -basal_mean.dot(axis.direction);
    return m;
}

ApexMotion apex_motion(const ContourFrame& ed, const ContourFrame& es, double threshold_percent) {
    LongAxis axis = long_axis(ed);
    ApexMotion a;
    a.displacement_along_axis = (es.apex - ed.apex).dot(axis.direction);
    a.percent_of_length = 100.0 * std::abs(a.displacement_along_axis) / axis.length;
    a.suspicious = a.percent_of_length > threshold_percent;
    return a;
}

ShapeRatio length_width_ratio(const ContourFrame& frame) {
    LongAxis axis = long_axis(frame);
    ShapeRatio r;
    r.length = axis.length;
    r.mid_width = width_at_station(frame.points, axis, axis.length / 2.0);
    if (r.mid_width <= 0)
        throw Error(ErrorKind::NonPositiveWidth, "contour does not span the axis midpoint");
    r.ratio = r.length / r.mid_width;
    return r;
}

SectorOverlap sector_intersection(const ContourFrame& frame, const Polygon& sector) {
    if (sector.size() < 3)
        throw Error(ErrorKind::InvalidSector, "sector polygon has fewer than 3 vertices");
    if (!polygon_is_simple(sector))
        throw Error(ErrorKind::InvalidSector, "sector polygon self-intersects");
    SectorOverlap o;
    o.contour_area = polygon_area(frame.points);
    o.intersection_area = intersection_area(frame.points, sector);
    o.ratio = std::clamp(o.intersection_area / o.contour_area, 0.0, 1.0);
    return o;
}

std::pair<ContourFrame, ContourFrame> order_ed_es(const ContourFrame& a, const ContourFrame& b) {
    // declared in contour_io.hpp; lives here because it needs disk_volume
    return disk_volume(a) >= disk_volume(b) ? std::make_pair(a, b) : std::make_pair(b, a);
}

AttributeVector compute_attribute_vector(const CardiacCycle& cycle,
                                         const std::optional<Polygon>& sector,
                                         const Thresholds& config) {
    double va = disk_volume(cycle.ed, config.n_disks);
    double vb = disk_volume(cycle.es, config.n_disks);

    AttributeVector v;
    v.video_id = cycle.video_id;
    v.ed_es_swapped = vb > va;
    const ContourFrame& ed = v.ed_es_swapped ? cycle.es : cycle.ed;
    const ContourFrame& es = v.ed_es_swapped ? cycle.ed : cycle.es;

    double mm3 = ed.spacing * ed.spacing * ed.spacing;
    v.edv = std::max(va, vb) * mm3;
    v.esv = std::min(va, vb) * mm3;
    v.ef_percent = ejection_fraction({v.edv, v.esv});

    LongAxis axis = long_axis(ed);
    v.bulge = bulge_score(ed, config);
    v.shape = length_width_ratio(ed);
    v.apex = apex_motion(ed, es, config.apex_percent);
    v.segments = segment_motion(ed, es, config);
    v.basal_signed = v.segments.basal_vertical;
    v.basal_percent = 100.0 * std::abs(v.basal_signed) / axis.length;

    // mean inward excursion of all contour points, as % of the axis length
    Vec2 center = polygon_vertex_mean(ed.points);
    double inward_sum = 0;
    for (size_t i = 0; i < ed.points.size(); ++i) {
        Vec2 outward = (ed.points[i] - center).normalized();
        inward_sum += -(es.points[i] - ed.points[i]).dot(outward);
    }
    v.global_percent = 100.0 * (inward_sum / ed.points.size()) / axis.length;

    if (sector) {
        v.sector = sector_intersection(ed, *sector);
    } else if (auto it = cycle.frames.find(ed.frame_index); it != cycle.frames.end()) {
        v.sector = sector_intersection(ed, derive_sector(it->second));
    }

    const ContourFrame& cframe = config.contrast_frame == "es" ? es : ed;
    if (auto it = cycle.frames.find(cframe.frame_index); it != cycle.frames.end()) {
        ContrastResult c = cavity_wall_contrast(it->second, cframe);
        v.contrast = c.contrast;
        v.contrast_ratio_mode = c.ratio_mode;
    }
    return v;
}

Thresholds thresholds_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::SchemaError, "thresholds must be an object");

    Thresholds t;
    for (auto& [key, value] : doc.items()) {
        auto num = [&, k = key]() {
            if (!value.is_number())
                throw Error(ErrorKind::SchemaError, "threshold " + k + " must be a number");
            return value.get<double>();
        };
        if (key == "bulge_t1") t.bulge_t1 = num();
        else if (key == "bulge_t2") t.bulge_t2 = num();
        else if (key == "bulge_t3") t.bulge_t3 = num();
        else if (key == "apex_percent") t.apex_percent = num();
        else if (key == "hypo_percent") t.hypo_percent = num();
        else if (key == "shape_low") t.shape_low = num();
        else if (key == "shape_high") t.shape_high = num();
        else if (key == "sector_min_ratio") t.sector_min_ratio = num();
        else if (key == "contrast_min") t.contrast_min = num();
        else if (key == "ef_reduced") t.ef_reduced = num();
        else if (key == "ef_mild") t.ef_mild = num();
        else if (key == "ef_normal_high") t.ef_normal_high = num();
        else if (key == "basal_min_percent") t.basal_min_percent = num();
        else if (key == "global_min_percent") t.global_min_percent = num();
        else if (key == "basal_use_image_y") {
            if (!value.is_boolean())
                throw Error(ErrorKind::SchemaError, "threshold basal_use_image_y must be a boolean");
            t.basal_use_image_y = value.get<bool>();
        } else if (key == "contrast_frame") {
            if (!value.is_string() || (value != "ed" && value != "es"))
                throw Error(ErrorKind::SchemaError, "contrast_frame must be \"ed\" or \"es\"");
            t.contrast_frame = value.get<std::string>();
        } else if (key == "n_disks") {
            if (!value.is_number_integer() || value.get<int>() < 4)
                throw Error(ErrorKind::SchemaError, "n_disks must be an integer ≥ 4");
            t.n_disks = value.get<int>();
        } else {
            throw Error(ErrorKind::SchemaError, "unknown threshold key " + key);
        }
    }
    if (!(t.bulge_t1 < t.bulge_t2 && t.bulge_t2 < t.bulge_t3))
        throw Error(ErrorKind::SchemaError, "bulge thresholds must be strictly ascending");
    return t;
}

std::string thresholds_to_json(const Thresholds& t) {
    json doc;
    doc["apex_percent"] = t.apex_percent;
    doc["basal_min_percent"] = t.basal_min_percent;
    doc["basal_use_image_y"] = t.basal_use_image_y;
    doc["bulge_t1"] = t.bulge_t1;
    doc["bulge_t2"] = t.bulge_t2;
    doc["bulge_t3"] = t.bulge_t3;
    doc["contrast_frame"] = t.contrast_frame;
    doc["contrast_min"] = t.contrast_min;
    doc["ef_mild"] = t.ef_mild;
    doc["ef_normal_high"] = t.ef_normal_high;
    doc["ef_reduced"] = t.ef_reduced;
    doc["global_min_percent"] = t.global_min_percent;
    doc["hypo_percent"] = t.hypo_percent;
    doc["n_disks"] = t.n_disks;
    doc["sector_min_ratio"] = t.sector_min_ratio;
    doc["shape_high"] = t.shape_high;
    doc["shape_low"] = t.shape_low;
    return doc.dump(2) + "\n";
}

std::string attribute_vector_to_json(const AttributeVector& v) {
    json doc;
    doc["video_id"] = v.video_id;
    doc["ef_percent"] = v.ef_percent;
    doc["edv"] = v.edv;
    doc["esv"] = v.esv;
    doc["ed_es_swapped"] = v.ed_es_swapped;
    doc["bulge_score"] = v.bulge.score;
    doc["bulge_depth"] = v.bulge.max_defect_depth;
    doc["bulge_class"] = bulge_class_name(v.bulge.cls);
    doc["bulge_defect"] = json::array({v.bulge.defect_begin, v.bulge.defect_end});
    doc["shape_length"] = v.shape.length;
    doc["shape_mid_width"] = v.shape.mid_width;
    doc["shape_ratio"] = v.shape.ratio;
    doc["apex_displacement"] = v.apex.displacement_along_axis;
    doc["apex_percent"] = v.apex.percent_of_length;
    doc["apex_suspicious"] = v.apex.suspicious;
    json labels = json::array();
    for (const SegmentEntry& e : v.segments.per_segment) labels.push_back(motion_label_name(e.label));
    doc["segment_labels"] = labels;
    int hypo = 0, dys = 0;
    for (const SegmentEntry& e : v.segments.per_segment) {
        hypo += e.label == MotionLabel::Hypokinetic;
        dys += e.label == MotionLabel::Dyskinetic;
    }
    doc["segment_hypokinetic"] = hypo;
    doc["segment_dyskinetic"] = dys;
    doc["basal_percent"] = v.basal_percent;
    doc["basal_signed"] = v.basal_signed;
    doc["global_percent"] = v.global_percent;
    doc["sector_ratio"] = v.sector ? json(v.sector->ratio) : json(nullptr);
    doc["contrast"] = v.contrast ? json(*v.contrast) : json(nullptr);
    doc["contrast_ratio_mode"] =
        v.contrast_ratio_mode ? json(*v.contrast_ratio_mode) : json(nullptr);
    return doc.dump(2) + "\n";
}

BulgeClass bulge_class_from_name(const std::string& name) {
    if (name == "prominent") return BulgeClass::Prominent;
    if (name == "mild") return BulgeClass::Mild;
    if (name == "none") return BulgeClass::None;
    if (name == "undetected_convexity") return BulgeClass::UndetectedConvexity;
    throw Error(ErrorKind::SchemaError, "unknown bulge class '" + name + "'");
}

MotionLabel motion_label_from_name(const std::string& name) {
    if (name == "normal") return MotionLabel::Normal;
    if (name == "hypokinetic") return MotionLabel::Hypokinetic;
    if (name == "dyskinetic") return MotionLabel::Dyskinetic;
    throw Error(ErrorKind::SchemaError, "unknown motion label '" + name + "'");
}

AttributeVector attribute_vector_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw Error(ErrorKind::SchemaError, "attribute vector must be a JSON object");

    auto num = [&doc](const char* key) -> double {
        if (!doc.contains(key) || !doc[key].is_number())
            throw Error(ErrorKind::SchemaError, std::string(key) + " must be a number");
        return doc[key].get<double>();
    };
    auto str = [&doc](const char* key) -> std::string {
        if (!doc.contains(key) || !doc[key].is_string())
            throw Error(ErrorKind::SchemaError, std::string(key) + " must be a string");
        return doc[key].get<std::string>();
    };
    auto boolean = [&doc](const char* key) -> bool {
        if (!doc.contains(key) || !doc[key].is_boolean())
            throw Error(ErrorKind::SchemaError, std::string(key) + " must be a boolean");
        return doc[key].get<bool>();
    };

    AttributeVector v;
    v.video_id = str("video_id");
    v.ef_percent = num("ef_percent");
    v.edv = num("edv");
    v.esv = num("esv");
    v.ed_es_swapped = boolean("ed_es_swapped");
    v.bulge.score = num("bulge_score");
    v.bulge.max_defect_depth = num("bulge_depth");
    v.bulge.cls = bulge_class_from_name(str("bulge_class"));
    if (doc.contains("bulge_defect") && doc["bulge_defect"].is_array() &&
        doc["bulge_defect"].size() == 2) {
        v.bulge.defect_begin = doc["bulge_defect"][0].get<int>();
        v.bulge.defect_end = doc["bulge_defect"][1].get<int>();
    }
    v.shape.length = num("shape_length");
    v.shape.mid_width = num("shape_mid_width");
    v.shape.ratio = num("shape_ratio");
    v.apex.displacement_along_axis = num("apex_displacement");
    v.apex.percent_of_length = num("apex_percent");
    v.apex.suspicious = boolean("apex_suspicious");
    if (!doc.contains("segment_labels") || !doc["segment_labels"].is_array() ||
        doc["segment_labels"].size() != 7)
        throw Error(ErrorKind::SchemaError, "segment_labels must be an array of 7 labels");
    for (size_t i = 0; i < 7; ++i)
        v.segments.per_segment[i].label =
            motion_label_from_name(doc["segment_labels"][i].get<std::string>());
    v.basal_percent = num("basal_percent");
    v.basal_signed = num("basal_signed");
    v.global_percent = num("global_percent");
    if (doc.contains("sector_ratio") && doc["sector_ratio"].is_number()) {
        SectorOverlap s;
        s.ratio = doc["sector_ratio"].get<double>();
        v.sector = s;
    }
    if (doc.contains("contrast") && doc["contrast"].is_number())
        v.contrast = doc["contrast"].get<double>();
    if (doc.contains("contrast_ratio_mode") && doc["contrast_ratio_mode"].is_boolean())
        v.contrast_ratio_mode = doc["contrast_ratio_mode"].get<bool>();
    return v;
}

}  // namespace echonle
