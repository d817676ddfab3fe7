#include "echonle/contour_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace echonle {

namespace {

using nlohmann::json;

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur)) {
        if (!cur.empty() && cur.back() == '\r') cur.pop_back();
        lines.push_back(cur);
    }
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ',')) {
        size_t b = cur.find_first_not_of(" \t");
        size_t e = cur.find_last_not_of(" \t");
        fields.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_number(const std::string& field, int line_no, const char* column) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value))
        throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) +
                                                 ": non-numeric " + column + " value '" + field + "'");
    return value;
}

int parse_frame_index(const std::string& field, int line_no) {
    double v = parse_number(field, line_no, "Frame");
    int i = static_cast<int>(std::lround(v));
    if (v != i || i < 0)
        throw Error(ErrorKind::MalformedRow,
                    "line " + std::to_string(line_no) + ": Frame must be a non-negative integer");
    return i;
}

json require(const json& obj, const char* key) {
    if (!obj.contains(key))
        throw Error(ErrorKind::SchemaError, std::string("missing field '") + key + "'");
    return obj.at(key);
}

Vec2 point_from_json(const json& value, const char* field) {
    if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number())
        throw Error(ErrorKind::SchemaError, std::string(field) + " must be a [x, y] pair");
    return {value[0].get<double>(), value[1].get<double>()};
}

ContourFrame frame_from_json(const json& obj, const char* which, double spacing) {
    if (!obj.is_object())
        throw Error(ErrorKind::SchemaError, std::string(which) + " must be an object");
    ContourFrame f;
    json idx = require(obj, "frame_index");
    if (!idx.is_number_integer() || idx.get<int>() < 0)
        throw Error(ErrorKind::SchemaError,
                    std::string(which) + ".frame_index must be a non-negative integer");
    f.frame_index = idx.get<int>();
    json pts = require(obj, "points");
    if (!pts.is_array() || pts.size() < 3)
        throw Error(ErrorKind::SchemaError,
                    std::string(which) + ".points must be an array of ≥ 3 [x, y] pairs");
    for (const json& p : pts) f.points.push_back(point_from_json(p, "points entry"));
    f.apex = point_from_json(require(obj, "apex"), "apex");
    f.basal_left = point_from_json(require(obj, "basal_left"), "basal_left");
    f.basal_right = point_from_json(require(obj, "basal_right"), "basal_right");
    f.spacing = spacing;
    return canonicalize(std::move(f));
}

json frame_to_json(const ContourFrame& f) {
    json obj;
    obj["apex"] = {f.apex.x, f.apex.y};
    obj["basal_left"] = {f.basal_left.x, f.basal_left.y};
    obj["basal_right"] = {f.basal_right.x, f.basal_right.y};
    obj["frame_index"] = f.frame_index;
    json pts = json::array();
    for (const Vec2& p : f.points) pts.push_back({p.x, p.y});
    obj["points"] = pts;
    return obj;
}

}  // namespace

std::map<std::string, std::map<int, std::vector<TracingRecord>>>
parse_volume_tracings(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) throw Error(ErrorKind::EmptyInput, "no tracing rows");

    std::vector<std::string> header = split_csv(lines[0]);
    const std::vector<std::string> expected = {"FileName", "X1", "Y1", "X2", "Y2", "Frame"};
    if (header != std::vector<std::string>(expected.begin(), expected.end()))
        throw Error(ErrorKind::MalformedRow,
                    "line 1: expected header FileName,X1,Y1,X2,Y2,Frame");

    std::map<std::string, std::map<int, std::vector<TracingRecord>>> out;
    size_t rows = 0;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        int line_no = static_cast<int>(i + 1);
        std::vector<std::string> f = split_csv(lines[i]);
        if (f.size() != 6)
            throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": expected 6 fields, got " +
                                                     std::to_string(f.size()));
        TracingRecord r;
        r.file_name = f[0];
        if (r.file_name.empty())
            throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": empty FileName");
        r.x1 = parse_number(f[1], line_no, "X1");
        r.y1 = parse_number(f[2], line_no, "Y1");
        r.x2 = parse_number(f[3], line_no, "X2");
        r.y2 = parse_number(f[4], line_no, "Y2");
        if (r.x1 < 0 || r.y1 < 0 || r.x2 < 0 || r.y2 < 0)
            throw Error(ErrorKind::MalformedRow,
                        "line " + std::to_string(line_no) + ": negative coordinate");
        r.frame = parse_frame_index(f[5], line_no);
        out[r.file_name][r.frame].push_back(r);
        ++rows;
    }
    if (rows == 0) throw Error(ErrorKind::EmptyInput, "no tracing rows after the header");
    return out;
}

std::map<std::string, ReferenceValues> parse_filelist(const std::string& text) {
    std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) throw Error(ErrorKind::EmptyInput, "empty file list");
    std::vector<std::string> header = split_csv(lines[0]);
    if (header.size() < 4 || header[0] != "FileName" || header[1] != "EF" ||
        header[2] != "ESV" || header[3] != "EDV")
        throw Error(ErrorKind::MalformedRow, "line 1: expected header beginning FileName,EF,ESV,EDV");

    std::map<std::string, ReferenceValues> out;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        int line_no = static_cast<int>(i + 1);
        std::vector<std::string> f = split_csv(lines[i]);
        if (f.size() < 4)
            throw Error(ErrorKind::MalformedRow,
                        "line " + std::to_string(line_no) + ": expected ≥ 4 fields");
        ReferenceValues ref;
        ref.ef = parse_number(f[1], line_no, "EF");
        ref.esv = parse_number(f[2], line_no, "ESV");
        ref.edv = parse_number(f[3], line_no, "EDV");
        out[f[0]] = ref;
    }
    if (out.empty()) throw Error(ErrorKind::EmptyInput, "no file list rows after the header");
    return out;
}

ContourFrame tracing_to_contour(const std::vector<TracingRecord>& records) {
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "no tracing records");
    if (records.size() < 2)
        throw Error(ErrorKind::DegenerateContour,
                    "long axis only: fewer than 3 boundary points");

    const TracingRecord& axis = records[0];
    Vec2 apex{axis.x1, axis.y1};
    Vec2 base_raw{axis.x2, axis.y2};
    double axis_len = (base_raw - apex).norm();
    if (axis_len < 1.0)
        throw Error(ErrorKind::DegenerateAxis,
                    "long-axis length " + std::to_string(axis_len) + " px < 1 px");
    Vec2 dir = (base_raw - apex).normalized();

    struct Chord {
        Vec2 left, right;
        double t;  // projection of the midpoint along the axis
    };
    std::vector<Chord> chords;
    for (size_t i = 1; i < records.size(); ++i) {
        Vec2 p{records[i].x1, records[i].y1};
        Vec2 q{records[i].x2, records[i].y2};
        // side sign: positive cross = image-left of the axis when it points
        // down-image
        double sp = dir.cross(p - apex);
        double sq = dir.cross(q - apex);
        Chord c;
        c.left = sp >= sq ? p : q;
        c.right = sp >= sq ? q : p;
        c.t = ((p + q) / 2.0 - apex).dot(dir);
        chords.push_back(c);
    }
    std::stable_sort(chords.begin(), chords.end(),
                     [](const Chord& a, const Chord& b) { return a.t < b.t; });

    ContourFrame f;
    f.frame_index = records[0].frame;
    f.apex = apex;
    f.basal_left = chords.back().left;
    f.basal_right = chords.back().right;
    for (const Chord& c : chords) f.points.push_back(c.left);
    for (auto it = chords.rbegin(); it != chords.rend(); ++it) f.points.push_back(it->right);
    return canonicalize(std::move(f));
}

void validate_frame(const ContourFrame& frame) {
    if (frame.points.size() < 3)
        throw Error(ErrorKind::DegenerateContour, "fewer than 3 boundary points");
    if (frame.frame_index < 0)
        throw Error(ErrorKind::InvariantViolation, "frame_index must be ≥ 0");
    if (!(frame.spacing > 0))
        throw Error(ErrorKind::InvariantViolation, "spacing must be > 0");
    if (!polygon_is_simple(frame.points))
        throw Error(ErrorKind::SelfIntersecting, "contour polygon self-intersects");
    if (polygon_area(frame.points) <= 1e-9)
        throw Error(ErrorKind::DegenerateContour, "contour area is zero");
    if (point_boundary_distance(frame.apex, frame.points) > 2.0 + 1e-9)
        throw Error(ErrorKind::InvariantViolation,
                    "apex lies farther than 2 px from the contour polyline");
}

ContourFrame canonicalize(ContourFrame frame) {
    size_t n = frame.points.size();
    if (n < 3) throw Error(ErrorKind::DegenerateContour, "fewer than 3 boundary points");

    auto nearest = [&](Vec2 target) {
        size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < n; ++i) {
            double d = (frame.points[i] - target).norm();
            if (d < best_d) best_d = d, best = i;
        }
        return best;
    };

    size_t i_bl = nearest(frame.basal_left);
    std::rotate(frame.points.begin(), frame.points.begin() + static_cast<long>(i_bl),
                frame.points.end());

    size_t pos_apex = nearest(frame.apex);
    size_t pos_br = nearest(frame.basal_right);
    if (pos_apex == 0 || pos_br == 0 || pos_apex == pos_br)
        throw Error(ErrorKind::InvariantViolation,
                    "basal and apex landmarks do not separate the contour walls");
    if (pos_apex > pos_br)  // apex must come first (septal wall first)
        std::reverse(frame.points.begin() + 1, frame.points.end());

    validate_frame(frame);
    return frame;
}

CardiacCycle parse_cycle(const std::string& text, CycleFormat format) {
    if (format == CycleFormat::Echonet) {
        auto videos = parse_volume_tracings(text);
        if (videos.size() != 1)
            throw Error(ErrorKind::SchemaError, "expected tracings of exactly one video, got " +
                                                    std::to_string(videos.size()));
        const auto& [name, frames] = *videos.begin();
        if (frames.size() != 2)
            throw Error(ErrorKind::SchemaError, "expected exactly 2 traced frames, got " +
                                                    std::to_string(frames.size()));
        auto it = frames.begin();
        ContourFrame a = tracing_to_contour(it->second);
        ContourFrame b = tracing_to_contour(std::next(it)->second);
        CardiacCycle cycle;
        cycle.video_id = name;
        std::tie(cycle.ed, cycle.es) = order_ed_es(a, b);
        return cycle;
    }

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::SchemaError, "document must be an object");

    CardiacCycle cycle;
    json vid = require(doc, "video_id");
    if (!vid.is_string()) throw Error(ErrorKind::SchemaError, "video_id must be a string");
    cycle.video_id = vid.get<std::string>();

    double spacing = 1.0;
    if (doc.contains("spacing")) {
        if (!doc["spacing"].is_number() || !(doc["spacing"].get<double>() > 0))
            throw Error(ErrorKind::SchemaError, "spacing must be a positive number");
        spacing = doc["spacing"].get<double>();
    }

    cycle.ed = frame_from_json(require(doc, "ed"), "ed", spacing);
    cycle.es = frame_from_json(require(doc, "es"), "es", spacing);
    if (cycle.ed.frame_index == cycle.es.frame_index)
        throw Error(ErrorKind::InvariantViolation, "ed.frame_index ≠ es.frame_index violated");

    if (doc.contains("reference")) {
        const json& ref = doc["reference"];
        if (!ref.is_object())
            throw Error(ErrorKind::SchemaError, "reference must be an object");
        auto num = [&](const char* key) {
            json v = require(ref, key);
            if (!v.is_number())
                throw Error(ErrorKind::SchemaError, std::string("reference.") + key + " must be a number");
            return v.get<double>();
        };
        cycle.reference = ReferenceValues{num("ef"), num("edv"), num("esv")};
    }
    return cycle;
}

std::string cycle_to_json(const CardiacCycle& cycle) {
    json doc;
    doc["video_id"] = cycle.video_id;
    doc["spacing"] = cycle.ed.spacing;
    doc["ed"] = frame_to_json(cycle.ed);
    doc["es"] = frame_to_json(cycle.es);
    if (cycle.reference) {
        doc["reference"] = {{"ef", cycle.reference->ef},
                            {"edv", cycle.reference->edv},
                            {"esv", cycle.reference->esv}};
    }
    return doc.dump(2) + "\n";
}

}  // namespace echonle
