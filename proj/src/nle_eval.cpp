#include "echonle/nle_eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace echonle {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    size_t e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// "[bulge]" and "[1/bulge]" both name the same option; drop the index prefix.
std::string slash_tail(const std::string& token) {
    size_t slash = token.find('/');
    return slash == std::string::npos ? token : token.substr(slash + 1);
}

std::string option_list(const std::array<QueryOption, 3>& options) {
    return "[" + std::to_string(options[0].index) + "/" + options[0].label + "], [" +
           std::to_string(options[1].index) + "/" + options[1].label + "] or [" +
           std::to_string(options[2].index) + "/" + options[2].label + "]";
}

// Splits a basic-sentence template into its literal chunks around {value};
// {class} is resolved first since each class knows its own label.
std::vector<std::string> template_chunks(const std::string& tmpl, const std::string& class_label,
                                         bool* has_value) {
    std::string resolved;
    for (size_t i = 0; i < tmpl.size();) {
        if (tmpl.compare(i, 7, "{class}") == 0) {
            resolved += class_label;
            i += 7;
        } else {
            resolved += tmpl[i++];
        }
    }
    std::vector<std::string> chunks;
    std::string cur;
    *has_value = false;
    for (size_t i = 0; i < resolved.size();) {
        if (resolved.compare(i, 7, "{value}") == 0) {
            chunks.push_back(cur);
            cur.clear();
            *has_value = true;
            i += 7;
        } else {
            cur += resolved[i++];
        }
    }
    chunks.push_back(cur);
    return chunks;
}

// All chunks appear in order; the gap after chunk 0 (when the template had a
// {value} hole) parses as the numeric value.
bool match_chunks(const std::string& text, const std::vector<std::string>& chunks,
                  bool has_value, double* value_out) {
    size_t pos = 0;
    size_t gap_start = std::string::npos;
    for (size_t i = 0; i < chunks.size(); ++i) {
        if (chunks[i].empty()) continue;
        size_t at = text.find(chunks[i], pos);
        if (at == std::string::npos) return false;
        if (i == 1 && has_value) gap_start = pos;
        if (i == 0 && has_value) gap_start = at + chunks[i].size();
        pos = at + chunks[i].size();
    }
    if (has_value && value_out && gap_start != std::string::npos) {
        try {
            *value_out = std::stod(text.substr(gap_start));
        } catch (...) {
            return false;
        }
    }
    return true;
}

AttrStatus status_of_option(int index) {
    switch (index) {
        case 1: return AttrStatus::Pathological;
        case 2: return AttrStatus::Unspecified;
        default: return AttrStatus::Normal;
    }
}

bool is_word_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '\'';
}

}  // namespace

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Match: return "match";
        case Verdict::Contradiction: return "contradiction";
        case Verdict::Hallucination: return "hallucination";
        case Verdict::Missing: return "missing";
    }
    return "?";
}

int ExtractionOutcome::count(Verdict v) const {
    int n = 0;
    for (const AttributeOutcome& a : per_attribute) n += a.verdict == v;
    return n;
}

std::vector<AttributeQuery> default_queries() {
    auto q = [](std::string key, std::string question, std::string patho, std::string normal,
                std::string ex_text, int ex_answer, std::string ex_expl) {
        AttributeQuery a;
        a.attribute_key = std::move(key);
        a.question = std::move(question);
        a.options = {QueryOption{1, std::move(patho)},
                     QueryOption{2, "not specified in the text"},
                     QueryOption{3, std::move(normal)}};
        a.exemplar = {std::move(ex_text), ex_answer, std::move(ex_expl)};
        return a;
    };
    return {
        q("septal_bulge", "Does the text mention any kind of bulge?", "bulge", "none",
          "There is a large bulge.", 1,
          "The text states that there is a large bulge present in the image, therefore it is "
          "present."),
        q("lv_shape", "Does the text mention an abnormal shape of the left ventricle?",
          "abnormal shape", "normal shape", "The left ventricle looks dilated.", 1,
          "The text states that the left ventricle looks dilated, which is an abnormal shape, "
          "therefore it is present."),
        q("segment_motion", "Does the text mention abnormal movement of wall segments?",
          "abnormal segment movement", "normal segment movement",
          "The segment movement is normal.", 3,
          "The text states that the segment movement is normal, therefore abnormal movement is "
          "not present."),
        q("basal_motion", "Does the text mention reduced movement of the basal points?",
          "reduced basal movement", "normal basal movement",
          "The movement of the basal points is reduced.", 1,
          "The text states that the basal points move less than normal, therefore reduced basal "
          "movement is present."),
        q("apex_foreshortening", "Does the text mention foreshortening or a moving apex?",
          "foreshortening", "no foreshortening", "There might be foreshortening.", 1,
          "The text states that foreshortening might be present, therefore it is mentioned."),
        q("sector_cut", "Does the text mention that the left ventricle is cut by the image sector?",
          "cut", "fully visible", "The left ventricle is cut.", 1,
          "The text states that the left ventricle is cut, therefore it is present."),
        q("image_quality", "Does the text mention reduced image quality?", "reduced quality",
          "good quality", "The image quality is reduced.", 1,
          "The text states that the image quality is reduced, therefore it is present."),
        q("ef_range", "Does the text mention an abnormal ejection fraction?",
          "abnormal ejection fraction", "normal ejection fraction",
          "The ejection fraction value of 35.00 is in the reduced range.", 1,
          "The text states that the ejection fraction is in the reduced range, which is "
          "abnormal, therefore it is present."),
        q("global_wall_motion", "Does the text mention reduced overall wall motion?",
          "reduced wall motion", "normal wall motion", "The overall wall motion is reduced.", 1,
          "The text states that the overall wall motion is reduced, therefore it is present."),
    };
}

std::vector<AttributeQuery> queries_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("queries") || !doc["queries"].is_array())
        throw Error(ErrorKind::SchemaError, "queries document must be {\"queries\": [...]}");

    std::vector<AttributeQuery> out;
    for (const json& j : doc["queries"]) {
        AttributeQuery a;
        if (!j.is_object() || !j.contains("attribute_key") || !j.contains("question") ||
            !j.contains("options") || !j.contains("exemplar"))
            throw Error(ErrorKind::SchemaError,
                        "each query needs attribute_key, question, options, exemplar");
        a.attribute_key = j["attribute_key"].get<std::string>();
        a.question = j["question"].get<std::string>();
        const json& opts = j["options"];
        if (!opts.is_array() || opts.size() != 3)
            throw Error(ErrorKind::SchemaError, a.attribute_key + ": exactly 3 options required");
        for (size_t i = 0; i < 3; ++i) {
            a.options[i].index = static_cast<int>(i) + 1;
            a.options[i].label = opts[i].get<std::string>();
        }
        if (a.options[0].label == a.options[1].label || a.options[1].label == a.options[2].label ||
            a.options[0].label == a.options[2].label)
            throw Error(ErrorKind::SchemaError, a.attribute_key + ": option labels must be unique");
        if (a.options[1].label != "not specified in the text")
            throw Error(ErrorKind::SchemaError,
                        a.attribute_key + ": option 2 must be \"not specified in the text\"");
        const json& ex = j["exemplar"];
        a.exemplar.text = ex.at("text").get<std::string>();
        a.exemplar.answer_index = ex.at("answer").get<int>();
        a.exemplar.explanation = ex.at("explanation").get<std::string>();
        if (a.exemplar.answer_index < 1 || a.exemplar.answer_index > 3)
            throw Error(ErrorKind::SchemaError, a.attribute_key + ": exemplar answer must be 1-3");
        out.push_back(std::move(a));
    }
    if (out.empty()) throw Error(ErrorKind::SchemaError, "queries document has no queries");
    return out;
}

std::string queries_to_json(const std::vector<AttributeQuery>& queries) {
    ordered_json doc;
    doc["queries"] = ordered_json::array();
    for (const AttributeQuery& a : queries) {
        ordered_json j;
        j["attribute_key"] = a.attribute_key;
        j["question"] = a.question;
        j["options"] = {a.options[0].label, a.options[1].label, a.options[2].label};
        j["exemplar"] = {{"text", a.exemplar.text},
                         {"answer", a.exemplar.answer_index},
                         {"explanation", a.exemplar.explanation}};
        doc["queries"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::vector<ChatMessage> build_attribute_query(const AttributeQuery& attr,
                                               const std::string& text) {
    if (trim(text).empty()) throw Error(ErrorKind::EmptyText, "target text is empty");
    const std::string opts = option_list(attr.options);
    const QueryOption& ex_opt = attr.options[static_cast<size_t>(attr.exemplar.answer_index - 1)];

    std::vector<ChatMessage> msgs;
    msgs.push_back({"user",
                    "I have the following text that describes an image and I want you to answer "
                    "some questions about it by selecting one from different options."});
    msgs.push_back({"assistant", "Sure let me help you with that, what is the text and the question"});
    msgs.push_back({"user", "This is the text: " + attr.exemplar.text + " " + attr.question +
                                " Pick ONE final answer out of: " + opts + "."});
    msgs.push_back({"assistant", "Final answer: [" + std::to_string(ex_opt.index) + "/" +
                                     ex_opt.label + "] \\n\\n Explanation: " +
                                     attr.exemplar.explanation});
    msgs.push_back({"user", "Great. Now do the same task for the following text: " + text + " " +
                                attr.question + " Pick ONE final answer out of: " + opts +
                                ". And please answer in the format:\n"
                                "Final answer: [option] \\n\\n Explanation: text"});
    return msgs;
}

int parse_final_answer(const std::string& response, const std::array<QueryOption, 3>& options) {
    std::string low = lower(response);
    size_t at = low.find("final answer:");
    if (at == std::string::npos)
        throw Error(ErrorKind::NoFinalAnswer, "no \"Final answer:\" line in the response");
    size_t after = at + std::string("final answer:").size();

    size_t open = response.find('[', after);
    if (open != std::string::npos) {
        size_t close = response.find(']', open + 1);
        if (close == std::string::npos)
            throw Error(ErrorKind::UnknownOption, "unterminated option bracket");
        std::string token = trim(response.substr(open + 1, close - open - 1));
        if (token.empty()) throw Error(ErrorKind::UnknownOption, "empty option bracket");

        if (std::isdigit(static_cast<unsigned char>(token[0]))) {
            size_t slash = token.find('/');
            std::string num = trim(slash == std::string::npos ? token : token.substr(0, slash));
            try {
                int k = std::stoi(num);
                if (k >= 1 && k <= 3) return k;
            } catch (...) {
            }
            throw Error(ErrorKind::UnknownOption, "option index '" + num + "' is not 1-3");
        }
        std::string label = lower(slash_tail(token));
        for (const QueryOption& o : options)
            if (lower(o.label) == label) return o.index;
        throw Error(ErrorKind::UnknownOption, "option label '" + token + "' not among the options");
    }

    // lenient fallback: bare label on the answer line
    size_t eol = response.find('\n', after);
    std::string rest = trim(response.substr(after, eol - after));
    while (!rest.empty() && (rest.back() == '.' || rest.back() == '!')) rest.pop_back();
    if (rest.empty()) throw Error(ErrorKind::NoFinalAnswer, "nothing after \"Final answer:\"");
    std::string rest_low = lower(rest);
    for (const QueryOption& o : options)
        if (lower(o.label) == rest_low) return o.index;
    throw Error(ErrorKind::UnknownOption, "answer '" + rest + "' is not a bracketed option or label");
}

AttributeStatusSet extract_statuses(const std::string& text, const AttributeRegistry& registry,
                                    const RuleBasedExtractor&) {
    AttributeStatusSet set;
    for (const AttributeSpec& spec : registry.attributes) {
        StatusEntry e;  // defaults to unspecified
        e.class_label = "unspecified";
        for (const ClassTemplates& cls : spec.classes) {
            bool has_value = false;
            std::vector<std::string> chunks = template_chunks(cls.basic, cls.class_label, &has_value);
            double value = 0;
            if (match_chunks(text, chunks, has_value, &value)) {
                e.status = cls.status;
                e.class_label = cls.class_label;
                if (has_value && e.status != AttrStatus::Unspecified) e.value = value;
                break;
            }
        }
        set.entries.push_back({spec.key, std::move(e)});
    }
    return set;
}

AttributeStatusSet extract_statuses(const std::string& text, const AttributeRegistry& registry,
                                    const LlmExtractor& extractor) {
    std::vector<AttributeQuery> queries =
        extractor.queries.empty() ? default_queries() : extractor.queries;

    AttributeStatusSet set;
    for (const AttributeSpec& spec : registry.attributes) {
        const AttributeQuery* query = nullptr;
        for (const AttributeQuery& q : queries)
            if (q.attribute_key == spec.key) query = &q;
        if (query == nullptr)
            throw Error(ErrorKind::UnknownAttributeKey,
                        "no judge query for registry attribute '" + spec.key + "'");

        std::string response = complete(extractor.config, build_attribute_query(*query, text));
        int answer = parse_final_answer(response, query->options);
        StatusEntry e;
        e.status = status_of_option(answer);
        e.class_label = query->options[static_cast<size_t>(answer - 1)].label;
        set.entries.push_back({spec.key, std::move(e)});
    }
    return set;
}

ExtractionOutcome compare_statuses(const AttributeStatusSet& gt, const AttributeStatusSet& pred) {
    if (gt.entries.size() != pred.entries.size())
        throw Error(ErrorKind::RegistryMismatch,
                    "status sets cover " + std::to_string(gt.entries.size()) + " vs " +
                        std::to_string(pred.entries.size()) + " attributes");
    ExtractionOutcome out;
    for (size_t i = 0; i < gt.entries.size(); ++i) {
        const auto& [gk, ge] = gt.entries[i];
        const auto& [pk, pe] = pred.entries[i];
        if (gk != pk)
            throw Error(ErrorKind::RegistryMismatch, "status sets disagree at position " +
                                                         std::to_string(i) + ": " + gk + " vs " + pk);
        AttributeOutcome a;
        a.key = gk;
        a.gt_status = ge.status;
        a.pred_status = pe.status;

        const AttrStatus G = ge.status, P = pe.status;
        if (G == AttrStatus::Pathological && P == AttrStatus::Normal)
            a.verdict = Verdict::Contradiction;
        else if (G == AttrStatus::Normal && P == AttrStatus::Pathological)
            a.verdict = Verdict::Contradiction;
        else if (G == AttrStatus::Unspecified && P == AttrStatus::Pathological)
            a.verdict = Verdict::Hallucination;
        else if (G == AttrStatus::Pathological && P == AttrStatus::Unspecified)
            a.verdict = Verdict::Missing;
        else
            a.verdict = Verdict::Match;  // equal after unspecified→normal mapping
        out.per_attribute.push_back(std::move(a));
    }
    return out;
}

EvalReport aggregate(const std::vector<ExtractionOutcome>& outcomes,
                     const std::vector<std::string>& texts) {
    if (outcomes.empty()) throw Error(ErrorKind::EmptyInput, "no outcomes to aggregate");
    size_t n_attrs = outcomes[0].per_attribute.size();
    for (const ExtractionOutcome& o : outcomes)
        if (o.per_attribute.size() != n_attrs)
            throw Error(ErrorKind::RegistryMismatch, "outcomes cover differing attribute counts");

    EvalReport r;
    r.n_samples = static_cast<int>(outcomes.size());
    long matches = 0, halluc = 0, contra = 0, missing = 0;
    for (const ExtractionOutcome& o : outcomes) {
        matches += o.count(Verdict::Match);
        halluc += o.count(Verdict::Hallucination);
        contra += o.count(Verdict::Contradiction);
        missing += o.count(Verdict::Missing);
    }
    r.accuracy = double(matches) / (double(n_attrs) * r.n_samples);
    r.mean_hallucinations = double(halluc) / r.n_samples;
    r.mean_contradictions = double(contra) / r.n_samples;
    r.mean_missing = double(missing) / r.n_samples;
    if (!texts.empty()) {
        double sum = 0;
        for (const std::string& t : texts) sum += flesch_reading_ease(t);
        r.flesch_mean = sum / double(texts.size());
    }
    r.per_sample = outcomes;
    return r;
}

int count_syllables_word(const std::string& word) {
    std::string w;
    for (char c : word)
        if (std::isalpha(static_cast<unsigned char>(c)))
            w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (w.empty()) return 1;  // pure number: one spoken unit, floor rule

    auto vowel = [](char c) {
        return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
    };
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        if (vowel(c)) {
            if (!in_group) ++groups;
            in_group = true;
        } else {
            in_group = false;
        }
    }
    // silent trailing e after a consonant ("fine", "image")
    if (groups > 1 && w.size() >= 2 && w.back() == 'e' && !vowel(w[w.size() - 2])) --groups;
    return std::max(1, groups);
}

double flesch_reading_ease(const std::string& text) {
    long words = 0, syllables = 0, sentence_marks = 0;
    std::string cur;
    bool prev_mark = false;
    for (char c : text) {
        if (is_word_char(c)) {
            cur += c;
            prev_mark = false;
        } else {
            if (!cur.empty()) {
                ++words;
                syllables += count_syllables_word(cur);
                cur.clear();
            }
            if (c == '.' || c == '!' || c == '?') {
                if (!prev_mark) ++sentence_marks;  // "..." counts once
                prev_mark = true;
            } else if (!std::isspace(static_cast<unsigned char>(c))) {
                prev_mark = false;
            }
        }
    }
    if (!cur.empty()) {
        ++words;
        syllables += count_syllables_word(cur);
    }
    if (words == 0) throw Error(ErrorKind::EmptyText, "text contains no words");
    double sentences = std::max(1L, sentence_marks);
    return 206.835 - 1.015 * (double(words) / sentences) - 84.6 * (double(syllables) / words);
}

std::vector<EvalPair> parse_eval_pairs(const std::string& text) {
    std::vector<EvalPair> pairs;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaError,
                        "line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!doc.is_object() || !doc.contains("id") || !doc.contains("gt_text") ||
            !doc.contains("pred_text"))
            throw Error(ErrorKind::SchemaError,
                        "line " + std::to_string(line_no) + ": need {id, gt_text, pred_text}");
        EvalPair p;
        p.id = doc["id"].is_string() ? doc["id"].get<std::string>() : doc["id"].dump();
        p.gt_text = doc["gt_text"].get<std::string>();
        p.pred_text = doc["pred_text"].get<std::string>();
        pairs.push_back(std::move(p));
    }
    if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no evaluation pairs");
    return pairs;
}

EvalReport evaluate_pairs(const std::vector<EvalPair>& pairs, const AttributeRegistry& registry) {
    if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "no evaluation pairs");
    std::vector<ExtractionOutcome> outcomes;
    std::vector<std::string> texts;
    for (const EvalPair& p : pairs) {
        AttributeStatusSet gt = extract_statuses(p.gt_text, registry, RuleBasedExtractor{});
        AttributeStatusSet pred = extract_statuses(p.pred_text, registry, RuleBasedExtractor{});
        ExtractionOutcome o = compare_statuses(gt, pred);
        o.sample_id = p.id;
        outcomes.push_back(std::move(o));
        texts.push_back(p.pred_text);
    }
    return aggregate(outcomes, texts);
}

std::string report_to_json(const EvalReport& report) {
    ordered_json doc;
    doc["n_samples"] = report.n_samples;
    doc["accuracy"] = report.accuracy;
    doc["accuracy_denominator"] = "all registry attributes, every sample";
    doc["mean_hallucinations"] = report.mean_hallucinations;
    doc["mean_contradictions"] = report.mean_contradictions;
    doc["mean_missing"] = report.mean_missing;
    doc["flesch_mean"] = report.flesch_mean;
    doc["seed"] = report.seed;
    ordered_json samples = ordered_json::array();
    for (const ExtractionOutcome& o : report.per_sample) {
        ordered_json s;
        s["id"] = o.sample_id;
        ordered_json attrs = ordered_json::array();
        for (const AttributeOutcome& a : o.per_attribute) {
            ordered_json e;
            e["key"] = a.key;
            e["gt"] = attr_status_name(a.gt_status);
            e["pred"] = attr_status_name(a.pred_status);
            e["verdict"] = verdict_name(a.verdict);
            attrs.push_back(std::move(e));
        }
        s["attributes"] = std::move(attrs);
        samples.push_back(std::move(s));
    }
    doc["per_sample"] = std::move(samples);
    return doc.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    char line[256];
    std::string out =
        "# accuracy counts all registry attributes for every sample: matches / (attributes x "
        "samples)\n";
    std::snprintf(line, sizeof line, "%-8s  %-6s  %-8s  %-11s  %-8s  %-8s\n", "samples", "acc",
                  "halluc.", "contradict.", "missing", "flesch");
    out += line;
    std::snprintf(line, sizeof line, "%-8d  %-6.3f  %-8.2f  %-11.2f  %-8.2f  %-8.2f\n",
                  report.n_samples, report.accuracy, report.mean_hallucinations,
                  report.mean_contradictions, report.mean_missing, report.flesch_mean);
    out += line;
    return out;
}

}  // namespace echonle
