#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "echonle/llm_gateway.hpp"
#include "echonle/narrative.hpp"

namespace echonle {

struct QueryOption {
    int index = 0;      // 1-based, as printed: [1/bulge]
    std::string label;  // e.g. "bulge", "not specified in the text", "none"
};

struct QueryExemplar {
    std::string text;
    int answer_index = 0;  // which option the exemplar answer names
    std::string explanation;
};

// One attribute's judge prompt: question, the three options
// (pathological / "not specified in the text" / normal) and a one-shot
// exemplar with answer and explanation.
struct AttributeQuery {
    std::string attribute_key;
    std::string question;
    std::array<QueryOption, 3> options;
    QueryExemplar exemplar;
};

// Built-in nine queries; identical to data/attribute_queries.json.
std::vector<AttributeQuery> default_queries();
std::vector<AttributeQuery> queries_from_json(const std::string& text);
std::string queries_to_json(const std::vector<AttributeQuery>& queries);

enum class Verdict { Match, Contradiction, Hallucination, Missing };
const char* verdict_name(Verdict v);

struct AttributeOutcome {
    std::string key;
    AttrStatus gt_status = AttrStatus::Unspecified;
    AttrStatus pred_status = AttrStatus::Unspecified;
    Verdict verdict = Verdict::Match;
};

struct ExtractionOutcome {
    std::string sample_id;
    std::vector<AttributeOutcome> per_attribute;

    int count(Verdict v) const;
};

struct EvalReport {
    int n_samples = 0;
    double accuracy = 0;  // matches / (attributes × samples)
    double mean_hallucinations = 0;
    double mean_contradictions = 0;
    double mean_missing = 0;
    double flesch_mean = 0;
    std::vector<ExtractionOutcome> per_sample;
    std::uint64_t seed = 0;
};

std::string report_to_json(const EvalReport& report);
// Aligned plain-text table (one metrics row) plus the accuracy-denominator
// note in the header.
std::string report_to_table(const EvalReport& report);

// --- Operations ----------------------------------------------------------------

// Messages replicating the one-shot judge structure: task framing with the
// question and options, the exemplar answered in the required
// "Final answer: [option] \n\n Explanation: text" format, then the target
// text and a repeat of the format instruction.
std::vector<ChatMessage> build_attribute_query(const AttributeQuery& attr,
                                               const std::string& text);

// Finds the first "Final answer:" line (case-insensitive) and matches the
// bracketed option by index prefix or full label. Returns the 1-based index.
int parse_final_answer(const std::string& response, const std::array<QueryOption, 3>& options);

struct RuleBasedExtractor {};
struct LlmExtractor {
    EndpointConfig config;
    std::vector<AttributeQuery> queries;  // empty → default_queries()
};

AttributeStatusSet extract_statuses(const std::string& text, const AttributeRegistry& registry,
                                    const RuleBasedExtractor& extractor);
AttributeStatusSet extract_statuses(const std::string& text, const AttributeRegistry& registry,
                                    const LlmExtractor& extractor);

// Comparison table, applied per attribute with unspecified→normal mapping
// for accuracy; precedence contradiction > hallucination > missing > match:
//   gt pathological, pred normal        → contradiction
//   gt normal,       pred pathological  → contradiction
//   gt unspecified,  pred pathological  → hallucination
//   gt pathological, pred unspecified   → missing
//   anything else                       → match
ExtractionOutcome compare_statuses(const AttributeStatusSet& gt, const AttributeStatusSet& pred);

EvalReport aggregate(const std::vector<ExtractionOutcome>& outcomes,
                     const std::vector<std::string>& prediction_texts);

// 206.835 − 1.015·(words/sentences) − 84.6·(syllables/words). Sentences are
// .!? runs (min 1); syllables by vowel-group count with silent trailing e
// and a per-word minimum of 1.
double flesch_reading_ease(const std::string& text);

// Helpers exposed for the readability tests.
int count_syllables_word(const std::string& word);

struct EvalPair {
    std::string id;
    std::string gt_text;
    std::string pred_text;
};

// JSON-lines `{id, gt_text, pred_text}` per line; blank lines skipped.
std::vector<EvalPair> parse_eval_pairs(const std::string& text);

// Full offline pipeline: rule-based extraction on both sides, compare,
// aggregate.
EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, const AttributeRegistry& registry);

}  // namespace echonle
