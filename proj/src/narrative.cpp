#include "echonle/narrative.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace echonle {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_value(double value, ValueFormat fmt) {
    char buf[64];
    if (fmt == ValueFormat::Integer)
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(value)));
    else
        std::snprintf(buf, sizeof buf, "%.2f", value);
    return buf;
}

// 69.00 → "69", 51.30 → "51.3" (used in the refinement instruction)
std::string trimmed_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", value);
    std::string s = buf;
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::string render(const std::string& tmpl, const std::string& class_label,
                   const std::optional<double>& value, ValueFormat fmt) {
    std::string out;
    for (size_t i = 0; i < tmpl.size();) {
        if (tmpl.compare(i, 7, "{value}") == 0) {
            out += value ? format_value(*value, fmt) : "?";
            i += 7;
        } else if (tmpl.compare(i, 7, "{class}") == 0) {
            out += class_label;
            i += 7;
        } else {
            out += tmpl[i++];
        }
    }
    return out;
}

void check_placeholders(const std::string& tmpl, const std::string& where) {
    for (size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] != '{') continue;
        if (tmpl.compare(i, 7, "{value}") == 0 || tmpl.compare(i, 7, "{class}") == 0) {
            i += 6;
            continue;
        }
        throw Error(ErrorKind::SchemaError,
                    where + ": templates may reference only {value} and {class}");
    }
}

AttrStatus status_from_name(const std::string& name, const std::string& where) {
    if (name == "pathological") return AttrStatus::Pathological;
    if (name == "normal") return AttrStatus::Normal;
    if (name == "unspecified") return AttrStatus::Unspecified;
    throw Error(ErrorKind::SchemaError, where + ": unknown status '" + name + "'");
}

const ClassTemplates& class_of(const AttributeSpec& spec, const std::string& label) {
    for (const ClassTemplates& c : spec.classes)
        if (c.class_label == label) return c;
    throw Error(ErrorKind::SchemaError,
                "registry attribute " + spec.key + " has no class '" + label + "'");
}

std::string ef_sentence(double ef_percent) {
    return "The ejection fraction is estimated as " + format_value(ef_percent, ValueFormat::Fixed2) +
           " percent.";
}

}  // namespace

const char* attr_status_name(AttrStatus s) {
    switch (s) {
        case AttrStatus::Pathological: return "pathological";
        case AttrStatus::Normal: return "normal";
        case AttrStatus::Unspecified: return "unspecified";
    }
    return "?";
}

const AttributeSpec& AttributeRegistry::at(const std::string& key) const {
    for (const AttributeSpec& a : attributes)
        if (a.key == key) return a;
    throw Error(ErrorKind::UnknownAttributeKey, "no registry attribute '" + key + "'");
}

const StatusEntry& AttributeStatusSet::at(const std::string& key) const {
    for (const auto& [k, e] : entries)
        if (k == key) return e;
    throw Error(ErrorKind::UnknownAttributeKey, "no status entry '" + key + "'");
}

StatusEntry* AttributeStatusSet::find(const std::string& key) {
    for (auto& [k, e] : entries)
        if (k == key) return &e;
    return nullptr;
}

const StatusEntry* AttributeStatusSet::find(const std::string& key) const {
    for (const auto& [k, e] : entries)
        if (k == key) return &e;
    return nullptr;
}

AttributeRegistry default_registry() {
    AttributeRegistry reg;
    auto add = [&](AttributeSpec spec) { reg.attributes.push_back(std::move(spec)); };
    using C = ClassTemplates;
    const AttrStatus P = AttrStatus::Pathological, N = AttrStatus::Normal,
                     U = AttrStatus::Unspecified;

    add({"septal_bulge", "septal bulge", "bulge_t1..bulge_t3", ValueFormat::Integer,
         {
             C{"prominent", P, "A bulge value of {value} means that there is a large septal bulge.",
               {"There is a large septal bulge, which may adversely affect the EF.",
                "A prominent basal septal bulge deforms the septum and may adversely affect the EF."}},
             C{"mild", P, "A bulge value of {value} means that there is a mild septal bulge.",
               {"There is a mild septal bulge, which can slightly affect the EF.",
                "A small basal septal bulge is present and may mildly influence the EF estimate."}},
             C{"none", N, "A bulge value of {value} means that there is no bulge.",
               {"There is no septal bulge present, the septal contour is regular.",
                "The interventricular septum appears smooth without a bulge, so no septal effect on the EF is expected."}},
             C{"undetected_convexity", U,
               "The septal convexity measurement was not reliable, so the bulge was not assessed.",
               {"The septal convexity could not be measured reliably, so nothing is said about a bulge."}},
             C{"unspecified", U, "The septal bulge was not assessed.",
               {"The septal bulge was not evaluated for this recording."}},
         }});

    add({"lv_shape", "left ventricle shape", "shape_low/shape_high", ValueFormat::Fixed2,
         {
             C{"dilated", P, "The height over width value is {value}, the left ventricle looks dilated.",
               {"The left ventricle appears dilated with a reduced length to width ratio, which is often associated with a reduced EF.",
                "A rounded, dilated ventricle shape is present and can lower the EF."}},
             C{"elongated", P,
               "The height over width value is {value}, the left ventricle looks unusually elongated.",
               {"The ventricle appears unusually elongated, which can indicate an atypical view and affect the EF estimate.",
                "An overly elongated ventricle shape is present, so the view may be atypical."}},
             C{"normal", N,
               "The height over width value is {value}, the shape of the left ventricle looks normal.",
               {"The left ventricle keeps its usual bullet-like shape, which supports a reliable EF estimate.",
                "The length to width proportion of the left ventricle is within the expected range."}},
             C{"unspecified", U, "The shape of the left ventricle was not assessed.",
               {"The ventricular shape was not evaluated."}},
         }});

    add({"segment_motion", "segment movement", "hypo_percent", ValueFormat::Integer,
         {
             C{"dyskinetic", P, "There are {value} dyskinetic segments with paradoxical movement.",
               {"At least one wall segment moves paradoxically outward during systole, which strongly reduces the EF.",
                "Dyskinetic wall motion is present, a severe regional abnormality that lowers the EF."}},
             C{"hypokinetic", P, "There are {value} hypokinetic segments with reduced movement.",
               {"Some wall segments contract weakly, which lowers the EF.",
                "Regional hypokinesia is present and reduces the effective ejection."}},
             C{"normal", N, "The segment movement is normal.",
               {"All wall segments contract evenly, supporting the EF estimate.",
                "Regional wall motion is homogeneous without weakly moving areas."}},
             C{"unspecified", U, "The segment movement was not assessed.",
               {"Regional wall motion was not evaluated."}},
         }});

    add({"basal_motion", "basal movement", "basal_min_percent", ValueFormat::Fixed2,
         {
             C{"reduced", P,
               "The movement of the basal points is reduced, the basal excursion is {value} percent of the long axis.",
               {"The basal plane moves weakly toward the apex, pointing to impaired longitudinal function and a lower EF.",
                "Reduced basal descent is present, which is associated with a reduced EF."}},
             C{"normal", N,
               "The basal points move normal, the basal excursion is {value} percent of the long axis.",
               {"The basal plane descends normally toward the apex during systole, consistent with preserved longitudinal function.",
                "Basal longitudinal motion is preserved."}},
             C{"unspecified", U, "The basal movement was not assessed.",
               {"Basal longitudinal motion was not evaluated."}},
         }});

    add({"apex_foreshortening", "apex foreshortening", "apex_percent", ValueFormat::Fixed2,
         {
             C{"suspicious", P,
               "The apex moves {value} percent of the long axis, there might be foreshortening.",
               {"The apex translates with a large amplitude throughout the cycle, so there might be foreshortening and the volumes may be underestimated.",
                "Pronounced apex movement suggests a foreshortened view, which makes the EF less reliable."}},
             C{"stable", N,
               "The apex moves {value} percent of the long axis, so there is no sign of foreshortening.",
               {"The apex stays nearly fixed during the cycle, so the view is unlikely to be foreshortened and the EF estimate is trustworthy.",
                "Apical translation is minimal, arguing against foreshortening."}},
             C{"unspecified", U, "The apex movement was not assessed.",
               {"Apical stability was not evaluated."}},
         }});

    add({"sector_cut", "sector coverage", "sector_min_ratio", ValueFormat::Fixed2,
         {
             C{"cut", P,
               "The left ventricle is cut by the imaging sector, the visible fraction is {value}.",
               {"Part of the left ventricle lies outside the ultrasound sector, so the contours and the EF may be unreliable.",
                "The ventricle is partially cut by the sector, which degrades the volume estimate."}},
             C{"visible", N,
               "The left ventricle lies fully inside the imaging sector, the visible fraction is {value}.",
               {"The whole ventricle is inside the ultrasound sector, so the contours are complete.",
                "No part of the ventricle is cut by the imaging sector."}},
             C{"unspecified", U, "The sector coverage was not assessed.",
               {"Whether the sector cuts the ventricle was not evaluated."}},
         }});

    add({"image_quality", "image quality", "contrast_min", ValueFormat::Fixed2,
         {
             C{"reduced", P, "The image quality is reduced, the contrast value is {value}.",
               {"The contrast between cavity and wall is low, so the contours and therefore the EF are less certain.",
                "Reduced image quality limits the confidence in the measurement."}},
             C{"good", N, "The image quality is good, the contrast value is {value}.",
               {"Cavity and wall are well separated in intensity, making the contours easy to follow.",
                "Good image contrast supports reliable contour delineation."}},
             C{"unspecified", U, "The image quality was not assessed.",
               {"Image quality was not evaluated."}},
         }});

    add({"ef_range", "ejection fraction range", "ef_reduced/ef_mild/ef_normal_high",
         ValueFormat::Fixed2,
         {
             C{"reduced", P, "The ejection fraction value of {value} is in the reduced range.",
               {"The ejection fraction is clearly reduced, indicating impaired systolic function.",
                "A reduced ejection fraction is present."}},
             C{"mildly_reduced", P,
               "The ejection fraction value of {value} is in the mildly reduced range.",
               {"The ejection fraction is mildly reduced, a borderline finding.",
                "A borderline, mildly reduced ejection fraction is present."}},
             C{"hyperdynamic", P, "The ejection fraction value of {value} is in the hyperdynamic range.",
               {"The ejection fraction is unusually high, which can reflect a hyperdynamic state or an underestimated end-systolic volume.",
                "A hyperdynamic ejection fraction is present."}},
             C{"normal", N, "The ejection fraction value of {value} is in the normal range.",
               {"The ejection fraction lies within the normal range, consistent with preserved systolic function.",
                "A normal-range ejection fraction is present."}},
             C{"unspecified", U, "The ejection fraction range was not assessed.",
               {"The ejection fraction range was not evaluated."}},
         }});

    add({"global_wall_motion", "overall wall motion", "global_min_percent", ValueFormat::Fixed2,
         {
             C{"reduced", P,
               "The overall wall motion is reduced, the mean inward excursion is {value} percent.",
               {"Global wall excursion is weak, in line with a reduced EF.",
                "The overall contraction amplitude is low."}},
             C{"normal", N,
               "The overall wall motion is normal, the mean inward excursion is {value} percent.",
               {"The walls contract in a coordinated way, consistent with the estimated EF.",
                "Global wall excursion is within the expected range."}},
             C{"unspecified", U, "The overall wall motion was not assessed.",
               {"Overall wall motion was not evaluated."}},
         }});

    return reg;
}

AttributeRegistry registry_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array())
        throw Error(ErrorKind::SchemaError, "registry must be {\"attributes\": [...]}");

    AttributeRegistry reg;
    for (const json& a : doc["attributes"]) {
        AttributeSpec spec;
        if (!a.is_object() || !a.contains("key") || !a["key"].is_string())
            throw Error(ErrorKind::SchemaError, "attribute entries need a string key");
        spec.key = a["key"].get<std::string>();
        for (const AttributeSpec& prev : reg.attributes)
            if (prev.key == spec.key)
                throw Error(ErrorKind::SchemaError, "duplicate attribute key " + spec.key);
        spec.human_name = a.value("human_name", spec.key);
        spec.threshold_binding = a.value("threshold_binding", "");
        std::string fmt = a.value("value_format", "fixed2");
        if (fmt == "int") spec.value_format = ValueFormat::Integer;
        else if (fmt == "fixed2") spec.value_format = ValueFormat::Fixed2;
        else throw Error(ErrorKind::SchemaError, spec.key + ": value_format must be fixed2 or int");
        if (!a.contains("classes") || !a["classes"].is_array() || a["classes"].empty())
            throw Error(ErrorKind::SchemaError, spec.key + ": classes must be a nonempty array");
        for (const json& c : a["classes"]) {
            ClassTemplates ct;
            if (!c.is_object() || !c.contains("label") || !c.contains("status") ||
                !c.contains("basic"))
                throw Error(ErrorKind::SchemaError,
                            spec.key + ": each class needs label, status and basic");
            ct.class_label = c["label"].get<std::string>();
            ct.status = status_from_name(c["status"].get<std::string>(), spec.key);
            ct.basic = c["basic"].get<std::string>();
            check_placeholders(ct.basic, spec.key + "/" + ct.class_label);
            if (c.contains("elaborated")) {
                for (const json& t : c["elaborated"]) {
                    ct.elaborated.push_back(t.get<std::string>());
                    check_placeholders(ct.elaborated.back(), spec.key + "/" + ct.class_label);
                }
            }
            spec.classes.push_back(std::move(ct));
        }
        reg.attributes.push_back(std::move(spec));
    }
    if (reg.attributes.empty()) throw Error(ErrorKind::SchemaError, "registry has no attributes");
    return reg;
}

std::string registry_to_json(const AttributeRegistry& registry) {
    ordered_json doc;
    doc["attributes"] = ordered_json::array();
    for (const AttributeSpec& a : registry.attributes) {
        ordered_json ja;
        ja["key"] = a.key;
        ja["human_name"] = a.human_name;
        ja["threshold_binding"] = a.threshold_binding;
        ja["value_format"] = a.value_format == ValueFormat::Integer ? "int" : "fixed2";
        ja["classes"] = ordered_json::array();
        for (const ClassTemplates& c : a.classes) {
            ordered_json jc;
            jc["label"] = c.class_label;
            jc["status"] = attr_status_name(c.status);
            jc["basic"] = c.basic;
            jc["elaborated"] = c.elaborated;
            ja["classes"].push_back(std::move(jc));
        }
        doc["attributes"].push_back(std::move(ja));
    }
    return doc.dump(2) + "\n";
}

AttributeStatusSet classify_attributes(const AttributeVector& v,
                                       const AttributeRegistry& registry, const Thresholds& t) {
    AttributeStatusSet set;
    for (const AttributeSpec& spec : registry.attributes) {
        StatusEntry e;
        std::string label;
        std::optional<double> value;

        if (spec.key == "septal_bulge") {
            label = bulge_class_name(v.bulge.cls);
            value = v.bulge.score;
        } else if (spec.key == "lv_shape") {
            value = v.shape.ratio;
            label = *value < t.shape_low ? "dilated"
                    : *value > t.shape_high ? "elongated" : "normal";
        } else if (spec.key == "segment_motion") {
            int hypo = 0, dys = 0;
            for (const SegmentEntry& s : v.segments.per_segment) {
                hypo += s.label == MotionLabel::Hypokinetic;
                dys += s.label == MotionLabel::Dyskinetic;
            }
            if (dys > 0) label = "dyskinetic", value = double(dys);
            else if (hypo > 0) label = "hypokinetic", value = double(hypo);
            else label = "normal", value = 0.0;
        } else if (spec.key == "basal_motion") {
            value = v.basal_percent;
            label = (v.basal_signed > 0 && v.basal_percent >= t.basal_min_percent) ? "normal"
                                                                                   : "reduced";
        } else if (spec.key == "apex_foreshortening") {
            value = v.apex.percent_of_length;
            label = v.apex.suspicious ? "suspicious" : "stable";
        } else if (spec.key == "sector_cut") {
            if (v.sector) {
                value = v.sector->ratio;
                label = *value >= t.sector_min_ratio ? "visible" : "cut";
            }
        } else if (spec.key == "image_quality") {
            if (v.contrast) {
                value = *v.contrast;
                label = *value >= t.contrast_min ? "good" : "reduced";
            }
        } else if (spec.key == "ef_range") {
            value = v.ef_percent;
            label = *value < t.ef_reduced ? "reduced"
                    : *value < t.ef_mild ? "mildly_reduced"
                    : *value <= t.ef_normal_high ? "normal" : "hyperdynamic";
        } else if (spec.key == "global_wall_motion") {
            value = v.global_percent;
            label = *value >= t.global_min_percent ? "normal" : "reduced";
        } else {
            throw Error(ErrorKind::UnknownAttributeKey,
                        "no measurement drives registry attribute '" + spec.key + "'");
        }

        if (label.empty()) {
            e.status = AttrStatus::Unspecified;
            e.class_label = "unspecified";
        } else {
            const ClassTemplates& cls = class_of(spec, label);
            e.status = cls.status;
            e.class_label = label;
            if (e.status != AttrStatus::Unspecified) e.value = value;
        }
        set.entries.push_back({spec.key, std::move(e)});
    }
    return set;
}

std::string basic_sentences(const AttributeStatusSet& statuses, const AttributeVector& vector,
                            const AttributeRegistry& registry) {
    (void)vector;  // values already live in the status entries
    std::string out;
    for (const AttributeSpec& spec : registry.attributes) {
        const StatusEntry& e = statuses.at(spec.key);
        const ClassTemplates& cls = class_of(spec, e.class_label);
        if (!out.empty()) out += " ";
        out += render(cls.basic, cls.class_label, e.value, spec.value_format);
    }
    return out;
}

std::string synthetic_explanation(const AttributeStatusSet& statuses,
                                  const AttributeRegistry& registry, std::uint64_t seed) {
    std::string out;
    for (size_t p = 0; p < registry.attributes.size(); ++p) {
        const AttributeSpec& spec = registry.attributes[p];
        const StatusEntry& e = statuses.at(spec.key);
        const ClassTemplates& cls = class_of(spec, e.class_label);
        if (cls.elaborated.empty())
            throw Error(ErrorKind::EmptyTemplatePool,
                        spec.key + "/" + cls.class_label + " has no elaborated templates");
        size_t idx = (seed * 2654435761ULL + p * 40503ULL) % cls.elaborated.size();
        if (!out.empty()) out += " ";
        out += render(cls.elaborated[idx], cls.class_label, e.value, spec.value_format);
    }
    return out;
}

RefinementPrompt build_refinement_prompt(double ef_percent, const std::string& basic_text) {
    if (ef_percent < 0 || ef_percent > 100)
        throw std::invalid_argument("ef_percent must be within [0, 100]");
    RefinementPrompt p;
    p.instruction =
        "Explain why the ejection fraction is estimated as " + trimmed_number(ef_percent) + "%.";
    p.input = "In the echocardiography image, it is measured that " + basic_text;
    return p;
}

std::string build_self_instruct_prompt(const std::vector<Exemplar>& exemplars,
                                       const std::string& new_input) {
    if (exemplars.empty())
        throw Error(ErrorKind::EmptyExemplars, "need at least one exemplar pair");
    if (exemplars.size() > 8)
        throw std::invalid_argument("at most 8 exemplar pairs are supported");

    std::string out =
        "You are given examples of echocardiography measurements, each followed by the "
        "explanation an expert cardiologist wrote for them. Study how the experts reason "
        "step by step from the measurements to their conclusions.\n\n";
    for (size_t i = 0; i < exemplars.size(); ++i) {
        out += "Example " + std::to_string(i + 1) + "\n";
        out += "Measurements: " + exemplars[i].input + "\n";
        out += "Expert explanation: " + exemplars[i].expert_explanation + "\n\n";
    }
    out += "Now think through the following measurements the same way the experts did and "
           "write the expert-style explanation for them.\n";
    out += "Measurements: " + new_input + "\n";
    out += "Expert explanation:";
    return out;
}

NarrativeBundle make_bundle(const AttributeVector& vector, const AttributeRegistry& registry,
                            std::uint64_t seed, const Thresholds& t) {
    AttributeStatusSet statuses = classify_attributes(vector, registry, t);

    NarrativeBundle b;
    b.ef_percent = vector.ef_percent;
    b.seed = seed;
    b.basic_text = ef_sentence(vector.ef_percent) + " " + basic_sentences(statuses, vector, registry);
    b.elaborated_text = synthetic_explanation(statuses, registry, seed);
    b.refinement_prompt = build_refinement_prompt(vector.ef_percent, b.basic_text);

    b.basic_provenance.push_back({"ef", "", AttrStatus::Normal, -1});
    for (size_t p = 0; p < registry.attributes.size(); ++p) {
        const AttributeSpec& spec = registry.attributes[p];
        const StatusEntry& e = statuses.at(spec.key);
        b.basic_provenance.push_back({spec.key, e.class_label, e.status, -1});
        const ClassTemplates& cls = class_of(spec, e.class_label);
        int idx = cls.elaborated.empty()
                      ? -1
                      : static_cast<int>((seed * 2654435761ULL + p * 40503ULL) % cls.elaborated.size());
        b.elaborated_provenance.push_back({spec.key, e.class_label, e.status, idx});
    }
    return b;
}

std::string bundle_to_json(const NarrativeBundle& bundle) {
    ordered_json doc;
    doc["ef_percent"] = bundle.ef_percent;
    doc["seed"] = bundle.seed;
    doc["basic_text"] = bundle.basic_text;
    doc["elaborated_text"] = bundle.elaborated_text;
    doc["refinement_prompt"] = {{"instruction", bundle.refinement_prompt.instruction},
                                {"input", bundle.refinement_prompt.input}};
    auto prov = [](const std::vector<SentenceProvenance>& list) {
        ordered_json arr = ordered_json::array();
        for (const SentenceProvenance& s : list) {
            ordered_json e;
            e["key"] = s.key;
            e["class"] = s.class_label;
            e["status"] = attr_status_name(s.status);
            e["pool_index"] = s.pool_index;
            arr.push_back(std::move(e));
        }
        return arr;
    };
    doc["basic_provenance"] = prov(bundle.basic_provenance);
    doc["elaborated_provenance"] = prov(bundle.elaborated_provenance);
    return doc.dump(2) + "\n";
}

}  // namespace echonle
