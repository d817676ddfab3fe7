#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "echonle/lv_geometry.hpp"

namespace echonle {

enum class AttrStatus { Pathological, Normal, Unspecified };
const char* attr_status_name(AttrStatus s);

// How {value} renders inside sentence templates.
enum class ValueFormat { Fixed2, Integer };

struct ClassTemplates {
    std::string class_label;  // e.g. "prominent", "none", "unspecified"
    AttrStatus status = AttrStatus::Unspecified;
    std::string basic;                    // one sentence, may use {value}/{class}
    std::vector<std::string> elaborated;  // pool for synthetic explanations
};

struct AttributeSpec {
    std::string key;         // e.g. "septal_bulge"
    std::string human_name;  // e.g. "septal bulge"
    std::string threshold_binding;  // which Thresholds fields drive the class
    ValueFormat value_format = ValueFormat::Fixed2;
    std::vector<ClassTemplates> classes;  // includes an "unspecified" class
};

struct AttributeRegistry {
    std::vector<AttributeSpec> attributes;

    const AttributeSpec& at(const std::string& key) const;  // UnknownAttributeKey
    size_t size() const { return attributes.size(); }
};

// Built-in nine-attribute registry; identical to data/registry_default.json.
AttributeRegistry default_registry();
AttributeRegistry registry_from_json(const std::string& text);
std::string registry_to_json(const AttributeRegistry& registry);

struct StatusEntry {
    AttrStatus status = AttrStatus::Unspecified;
    std::string class_label;
    std::optional<double> value;  // absent when unspecified
};

struct AttributeStatusSet {
    // key → entry, one per registry attribute, in registry order
    std::vector<std::pair<std::string, StatusEntry>> entries;

    const StatusEntry& at(const std::string& key) const;  // UnknownAttributeKey
    StatusEntry* find(const std::string& key);
    const StatusEntry* find(const std::string& key) const;
};

struct RefinementPrompt {
    std::string instruction;
    std::string input;
};

struct SentenceProvenance {
    std::string key;          // registry key, or "ef" for the leading sentence
    std::string class_label;  // chosen template class
    AttrStatus status = AttrStatus::Unspecified;
    int pool_index = -1;      // elaborated-pool pick, -1 for basic sentences
};

struct NarrativeBundle {
    double ef_percent = 0;
    std::string basic_text;
    std::string elaborated_text;
    RefinementPrompt refinement_prompt;
    std::vector<SentenceProvenance> basic_provenance;
    std::vector<SentenceProvenance> elaborated_provenance;
    std::uint64_t seed = 0;
};

std::string bundle_to_json(const NarrativeBundle& bundle);

// --- Operations ----------------------------------------------------------------

// Maps measured values to classes/statuses using the thresholds; attributes
// whose inputs were absent become unspecified.
AttributeStatusSet classify_attributes(const AttributeVector& vector,
                                       const AttributeRegistry& registry,
                                       const Thresholds& t = {});

// One sentence per registry attribute, in registry order, joined by single
// spaces. Values render per the attribute's value_format (2 decimals unless
// the registry marks the value integral).
std::string basic_sentences(const AttributeStatusSet& statuses,
                            const AttributeVector& vector,
                            const AttributeRegistry& registry);

// Seeded elaborated text: for the attribute at registry position p with a
// pool of size m, pick index (seed·2654435761 + p·40503) mod m. Deterministic
// per (seed, registry); adjacent seeds differ on pools of size ≥ 2.
std::string synthetic_explanation(const AttributeStatusSet& statuses,
                                  const AttributeRegistry& registry,
                                  std::uint64_t seed);

RefinementPrompt build_refinement_prompt(double ef_percent, const std::string& basic_text);

struct Exemplar {
    std::string input;
    std::string expert_explanation;
};

// Chain-of-thought augmentation prompt: numbered exemplar pairs, then the
// new input and an instruction to continue in the experts' style.
std::string build_self_instruct_prompt(const std::vector<Exemplar>& exemplars,
                                       const std::string& new_input);

// Full phase-1 assembly for one measured cycle.
NarrativeBundle make_bundle(const AttributeVector& vector, const AttributeRegistry& registry,
                            std::uint64_t seed, const Thresholds& t = {});

}  // namespace echonle
