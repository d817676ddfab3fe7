// Python bindings for the core operations: cycle ingestion, geometry
// attributes, narrative generation and explanation scoring. Orchestration
// results cross the boundary as JSON strings (stable, schema-documented);
// small values cross as native types.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>

#include "echonle/contour_io.hpp"
#include "echonle/frame_metrics.hpp"
#include "echonle/llm_gateway.hpp"
#include "echonle/lv_geometry.hpp"
#include "echonle/narrative.hpp"
#include "echonle/nle_eval.hpp"

namespace py = pybind11;
using namespace echonle;

namespace {

CycleFormat format_from_name(const std::string& name) {
    if (name == "native") return CycleFormat::NativeJson;
    if (name == "echonet") return CycleFormat::Echonet;
    throw Error(ErrorKind::SchemaError, "format must be 'native' or 'echonet'");
}

AttributeRegistry registry_arg(const std::string& registry_json) {
    return registry_json.empty() ? default_registry() : registry_from_json(registry_json);
}

Thresholds thresholds_arg(const std::string& thresholds_json) {
    return thresholds_json.empty() ? Thresholds{} : thresholds_from_json(thresholds_json);
}

std::vector<ChatMessage> messages_arg(const std::vector<std::pair<std::string, std::string>>& raw) {
    std::vector<ChatMessage> msgs;
    for (const auto& [role, content] : raw) msgs.push_back({role, content});
    return msgs;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "left-ventricle contour analysis, narrative generation and explanation scoring";
    m.attr("__version__") = "0.1.0";

    py::register_exception<Error>(m, "EchonleError");

    py::class_<Vec2>(m, "Vec2")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
        .def_readwrite("x", &Vec2::x)
        .def_readwrite("y", &Vec2::y)
        .def("__repr__", [](const Vec2& v) {
            return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ")";
        });

    py::class_<ContourFrame>(m, "ContourFrame")
        .def(py::init<>())
        .def_readwrite("points", &ContourFrame::points)
        .def_readwrite("apex", &ContourFrame::apex)
        .def_readwrite("basal_left", &ContourFrame::basal_left)
        .def_readwrite("basal_right", &ContourFrame::basal_right)
        .def_readwrite("frame_index", &ContourFrame::frame_index)
        .def_readwrite("spacing", &ContourFrame::spacing);

    py::class_<ReferenceValues>(m, "ReferenceValues")
        .def(py::init<>())
        .def_readwrite("ef", &ReferenceValues::ef)
        .def_readwrite("edv", &ReferenceValues::edv)
        .def_readwrite("esv", &ReferenceValues::esv);

    py::class_<GrayFrame>(m, "GrayFrame")
        .def(py::init<>())
        .def_readwrite("width", &GrayFrame::width)
        .def_readwrite("height", &GrayFrame::height)
        .def_property(
            "pixels",
            [](const GrayFrame& f) {
                return py::bytes(reinterpret_cast<const char*>(f.pixels.data()), f.pixels.size());
            },
            [](GrayFrame& f, const py::bytes& b) {
                std::string s = b;
                f.pixels.assign(s.begin(), s.end());
            });

    py::class_<CardiacCycle>(m, "CardiacCycle")
        .def(py::init<>())
        .def_readwrite("video_id", &CardiacCycle::video_id)
        .def_readwrite("ed", &CardiacCycle::ed)
        .def_readwrite("es", &CardiacCycle::es)
        .def_readwrite("frames", &CardiacCycle::frames)
        .def_readwrite("reference", &CardiacCycle::reference);

    // --- ingestion -----------------------------------------------------------
    m.def(
        "parse_cycle",
        [](const std::string& text, const std::string& format) {
            return parse_cycle(text, format_from_name(format));
        },
        py::arg("text"), py::arg("format") = "native");
    m.def("cycle_to_json", &cycle_to_json, py::arg("cycle"));
    m.def(
        "canonicalize", [](ContourFrame frame) { return canonicalize(std::move(frame)); },
        py::arg("frame"));
    m.def("validate_frame", &validate_frame, py::arg("frame"));
    m.def("order_ed_es", &order_ed_es, py::arg("a"), py::arg("b"));

    // --- geometry ------------------------------------------------------------
    m.def("disk_volume", &disk_volume, py::arg("frame"), py::arg("n_disks") = 20);
    m.def(
        "ejection_fraction",
        [](double edv, double esv) { return ejection_fraction({edv, esv}); },
        py::arg("edv"), py::arg("esv"));
    m.def(
        "bulge_score",
        [](const ContourFrame& frame, const std::string& thresholds_json) {
            BulgeResult b = bulge_score(frame, thresholds_arg(thresholds_json));
            py::dict d;
            d["score"] = b.score;
            d["depth"] = b.max_defect_depth;
            d["defect"] = py::make_tuple(b.defect_begin, b.defect_end);
            d["class"] = bulge_class_name(b.cls);
            return d;
        },
        py::arg("frame"), py::arg("thresholds_json") = "");
    m.def(
        "apex_motion",
        [](const ContourFrame& ed, const ContourFrame& es, double threshold_percent) {
            ApexMotion a = apex_motion(ed, es, threshold_percent);
            py::dict d;
            d["displacement"] = a.displacement_along_axis;
            d["percent"] = a.percent_of_length;
            d["suspicious"] = a.suspicious;
            return d;
        },
        py::arg("ed"), py::arg("es"), py::arg("threshold_percent") = 8.0);
    m.def(
        "length_width_ratio",
        [](const ContourFrame& frame) {
            ShapeRatio s = length_width_ratio(frame);
            py::dict d;
            d["length"] = s.length;
            d["mid_width"] = s.mid_width;
            d["ratio"] = s.ratio;
            return d;
        },
        py::arg("frame"));
    m.def(
        "segment_motion",
        [](const ContourFrame& ed, const ContourFrame& es, const std::string& thresholds_json) {
            SegmentMotion sm = segment_motion(ed, es, thresholds_arg(thresholds_json));
            py::list labels;
            for (const SegmentEntry& e : sm.per_segment) labels.append(motion_label_name(e.label));
            py::dict d;
            d["labels"] = labels;
            d["basal_vertical"] = sm.basal_vertical;
            return d;
        },
        py::arg("ed"), py::arg("es"), py::arg("thresholds_json") = "");
    m.def(
        "measure_cycle",
        [](const CardiacCycle& cycle, const std::string& thresholds_json,
           std::optional<Polygon> sector) {
            return attribute_vector_to_json(
                compute_attribute_vector(cycle, sector, thresholds_arg(thresholds_json)));
        },
        py::arg("cycle"), py::arg("thresholds_json") = "", py::arg("sector") = py::none(),
        "Attribute-vector JSON for one cycle.");

    // --- frame metrics ---------------------------------------------------------
    m.def(
        "load_pgm", [](const py::bytes& data) { return load_pgm(std::string(data)); },
        py::arg("data"));
    m.def("derive_sector", &derive_sector, py::arg("frame"), py::arg("intensity_floor") = 2);
    m.def(
        "cavity_wall_contrast",
        [](const GrayFrame& frame, const ContourFrame& contour, double band_px) {
            ContrastResult c = cavity_wall_contrast(frame, contour, band_px);
            py::dict d;
            d["cavity_mean"] = c.cavity_mean;
            d["wall_mean"] = c.wall_mean;
            d["contrast"] = c.contrast;
            d["ratio_mode"] = c.ratio_mode;
            return d;
        },
        py::arg("frame"), py::arg("contour"), py::arg("band_px") = 4.0);

    // --- narrative -------------------------------------------------------------
    m.def("default_registry_json", [] { return registry_to_json(default_registry()); });
    m.def("default_thresholds_json", [] { return thresholds_to_json(Thresholds{}); });
    m.def(
        "narrate_vector",
        [](const std::string& vector_json, std::uint64_t seed, const std::string& registry_json,
           const std::string& thresholds_json) {
            return bundle_to_json(make_bundle(attribute_vector_from_json(vector_json),
                                              registry_arg(registry_json), seed,
                                              thresholds_arg(thresholds_json)));
        },
        py::arg("vector_json"), py::arg("seed") = 0, py::arg("registry_json") = "",
        py::arg("thresholds_json") = "", "NarrativeBundle JSON for one measured vector.");
    m.def(
        "build_refinement_prompt",
        [](double ef_percent, const std::string& basic_text) {
            RefinementPrompt p = build_refinement_prompt(ef_percent, basic_text);
            return py::make_tuple(p.instruction, p.input);
        },
        py::arg("ef_percent"), py::arg("basic_text"));
    m.def(
        "build_self_instruct_prompt",
        [](const std::vector<std::pair<std::string, std::string>>& exemplars,
           const std::string& new_input) {
            std::vector<Exemplar> ex;
            for (const auto& [input, expert] : exemplars) ex.push_back({input, expert});
            return build_self_instruct_prompt(ex, new_input);
        },
        py::arg("exemplars"), py::arg("new_input"));
    m.def("flatten_mistral",
          [](const std::vector<std::pair<std::string, std::string>>& messages) {
              return flatten_mistral(messages_arg(messages));
          },
          py::arg("messages"));

    // --- evaluation --------------------------------------------------------------
    m.def("default_queries_json", [] { return queries_to_json(default_queries()); });
    m.def(
        "extract_statuses",
        [](const std::string& text, const std::string& registry_json) {
            AttributeStatusSet set =
                extract_statuses(text, registry_arg(registry_json), RuleBasedExtractor{});
            py::dict d;
            for (const auto& [key, e] : set.entries) {
                py::dict v;
                v["status"] = attr_status_name(e.status);
                v["class"] = e.class_label;
                v["value"] = e.value ? py::cast(*e.value) : py::object(py::none());
                d[py::str(key)] = v;
            }
            return d;
        },
        py::arg("text"), py::arg("registry_json") = "");
    m.def(
        "build_attribute_query",
        [](const std::string& attribute_key, const std::string& text,
           const std::string& queries_json) {
            std::vector<AttributeQuery> queries =
                queries_json.empty() ? default_queries() : queries_from_json(queries_json);
            for (const AttributeQuery& q : queries)
                if (q.attribute_key == attribute_key) {
                    std::vector<std::pair<std::string, std::string>> out;
                    for (const ChatMessage& msg : build_attribute_query(q, text))
                        out.push_back({msg.role, msg.content});
                    return out;
                }
            throw Error(ErrorKind::UnknownAttributeKey,
                        "no query for attribute '" + attribute_key + "'");
        },
        py::arg("attribute_key"), py::arg("text"), py::arg("queries_json") = "");
    m.def(
        "parse_final_answer",
        [](const std::string& response, const std::vector<std::string>& option_labels) {
            if (option_labels.size() != 3)
                throw Error(ErrorKind::SchemaError, "exactly 3 option labels required");
            std::array<QueryOption, 3> options;
            for (size_t i = 0; i < 3; ++i) options[i] = {int(i) + 1, option_labels[i]};
            return parse_final_answer(response, options);
        },
        py::arg("response"), py::arg("option_labels"));
    m.def(
        "evaluate_pairs",
        [](const std::string& pairs_jsonl, const std::string& registry_json) {
            return report_to_json(
                evaluate_pairs(parse_eval_pairs(pairs_jsonl), registry_arg(registry_json)));
        },
        py::arg("pairs_jsonl"), py::arg("registry_json") = "",
        "Offline rule-based evaluation; report JSON.");
    m.def("flesch_reading_ease", &flesch_reading_ease, py::arg("text"));
    m.def("count_syllables_word", &count_syllables_word, py::arg("word"));
}
