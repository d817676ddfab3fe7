// echonle: batch front door for contour ingestion, attribute measurement,
// narrative generation and explanation scoring.
#include <atomic>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "echonle/contour_io.hpp"
#include "echonle/frame_metrics.hpp"
#include "echonle/llm_gateway.hpp"
#include "echonle/lv_geometry.hpp"
#include "echonle/narrative.hpp"
#include "echonle/nle_eval.hpp"

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw echonle::Error(echonle::ErrorKind::IoFailure, "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// "-" or empty → stdout.
void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw echonle::Error(echonle::ErrorKind::IoFailure, "cannot write " + path);
    out << text;
}

// Options shared by every subcommand that ingests cycles.
struct IngestOpts {
    std::vector<std::string> inputs;
    std::string format = "native";
    std::string filelist;
    std::string thresholds_path;
    std::string contrast_frame;  // empty = keep thresholds default
    double spacing = 0;          // 0 = keep per-document spacing
    std::string ed_image, es_image;
    int raw_width = 0, raw_height = 0;  // raw 8-bit images instead of PGM
    std::string sector_path;
};

void add_ingest_options(CLI::App* sub, IngestOpts& o) {
    sub->fallthrough();  // let --seed/--output appear after the subcommand
    sub->add_option("inputs", o.inputs, "cycle documents (native JSON) or tracing CSVs")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--format", o.format, "input format")
        ->check(CLI::IsMember({"native", "echonet"}))
        ->capture_default_str();
    sub->add_option("--filelist", o.filelist,
                    "FileName,EF,ESV,EDV reference CSV (echonet format only)")
        ->check(CLI::ExistingFile);
    sub->add_option("--thresholds", o.thresholds_path, "thresholds JSON file")
        ->check(CLI::ExistingFile);
    sub->add_option("--contrast-frame", o.contrast_frame, "frame contrast is measured on")
        ->check(CLI::IsMember({"ed", "es"}));
    sub->add_option("--spacing", o.spacing, "mm per pixel, overrides document spacing")
        ->check(CLI::PositiveNumber);
    sub->add_option("--ed-image", o.ed_image, "ED grayscale image (single-cycle runs)")
        ->check(CLI::ExistingFile);
    sub->add_option("--es-image", o.es_image, "ES grayscale image (single-cycle runs)")
        ->check(CLI::ExistingFile);
    sub->add_option("--raw-width", o.raw_width, "image width when images are raw 8-bit")
        ->check(CLI::PositiveNumber);
    sub->add_option("--raw-height", o.raw_height, "image height when images are raw 8-bit")
        ->check(CLI::PositiveNumber);
    sub->add_option("--sector", o.sector_path, "explicit sector polygon JSON [[x,y],...]")
        ->check(CLI::ExistingFile);
}

echonle::Thresholds load_thresholds(const IngestOpts& o) {
    echonle::Thresholds t;
    if (!o.thresholds_path.empty()) t = echonle::thresholds_from_json(read_file(o.thresholds_path));
    if (!o.contrast_frame.empty()) t.contrast_frame = o.contrast_frame;
    return t;
}

echonle::GrayFrame load_image(const std::string& path, int raw_width, int raw_height) {
    std::string bytes = read_file(path);
    if (raw_width > 0 && raw_height > 0) {
        size_t expected = size_t(raw_width) * size_t(raw_height);
        if (bytes.size() != expected)
            throw echonle::Error(echonle::ErrorKind::TruncatedData,
                                 path + ": raw image has " + std::to_string(bytes.size()) +
                                     " bytes, expected " + std::to_string(expected));
        echonle::GrayFrame f;
        f.width = raw_width;
        f.height = raw_height;
        f.pixels.assign(bytes.begin(), bytes.end());
        return f;
    }
    return echonle::load_pgm(bytes);
}

echonle::Polygon load_sector(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw echonle::Error(echonle::ErrorKind::SchemaError,
                             path + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array() || doc.size() < 3)
        throw echonle::Error(echonle::ErrorKind::SchemaError,
                             path + ": sector must be an array of at least 3 [x,y] points");
    echonle::Polygon poly;
    for (const json& p : doc) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
            throw echonle::Error(echonle::ErrorKind::SchemaError,
                                 path + ": sector points must be [x,y] numbers");
        poly.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return poly;
}

struct SoftFailure {
    std::string source;
    echonle::ErrorKind kind;
    std::string message;
};

// Native: one cycle per document. EchoNet: every video with exactly two
// traced frames in each CSV becomes a cycle; anything else is a soft skip.
std::vector<echonle::CardiacCycle> load_cycles(const IngestOpts& o,
                                               std::vector<SoftFailure>& soft) {
    std::vector<echonle::CardiacCycle> cycles;
    std::map<std::string, echonle::ReferenceValues> refs;
    if (!o.filelist.empty()) refs = echonle::parse_filelist(read_file(o.filelist));

    for (const std::string& path : o.inputs) {
        if (o.format == "native") {
            try {
                cycles.push_back(
                    echonle::parse_cycle(read_file(path), echonle::CycleFormat::NativeJson));
            } catch (const echonle::Error& e) {
                soft.push_back({path, e.kind(), e.what()});
            }
            continue;
        }
        auto videos = echonle::parse_volume_tracings(read_file(path));
        for (const auto& [video, frames] : videos) {
            try {
                if (frames.size() != 2)
                    throw echonle::Error(echonle::ErrorKind::SchemaError,
                                         "expected 2 traced frames, got " +
                                             std::to_string(frames.size()));
                auto it = frames.begin();
                echonle::ContourFrame a = echonle::tracing_to_contour(it->second);
                a.frame_index = it->first;
                ++it;
                echonle::ContourFrame b = echonle::tracing_to_contour(it->second);
                b.frame_index = it->first;
                auto [ed, es] = echonle::order_ed_es(a, b);
                echonle::CardiacCycle cycle;
                cycle.video_id = video;
                cycle.ed = ed;
                cycle.es = es;
                if (auto ref = refs.find(video); ref != refs.end()) cycle.reference = ref->second;
                cycles.push_back(std::move(cycle));
            } catch (const echonle::Error& e) {
                soft.push_back({path + ":" + video, e.kind(), e.what()});
            }
        }
    }

    for (echonle::CardiacCycle& c : cycles) {
        if (o.spacing > 0) c.ed.spacing = c.es.spacing = o.spacing;
        if (!o.ed_image.empty() || !o.es_image.empty()) {
            if (cycles.size() != 1)
                throw echonle::Error(echonle::ErrorKind::SchemaError,
                                     "--ed-image/--es-image require a single-cycle input");
            if (!o.ed_image.empty())
                c.frames[c.ed.frame_index] = load_image(o.ed_image, o.raw_width, o.raw_height);
            if (!o.es_image.empty())
                c.frames[c.es.frame_index] = load_image(o.es_image, o.raw_width, o.raw_height);
        }
    }
    return cycles;
}

void report_soft_failures(const char* sub, const std::vector<SoftFailure>& soft, size_t total) {
    for (const SoftFailure& f : soft)
        std::cerr << "echonle " << sub << ": " << f.source << ": " << f.message << "\n";
    if (!soft.empty())
        std::cerr << "echonle " << sub << ": skipped " << soft.size() << " of " << total
                  << " cycles\n";
}

// Fan out fn(0..n) over up to `jobs` threads; fn must not throw.
template <typename Fn>
void parallel_for(int n, int jobs, Fn fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(size_t(jobs));
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < n;) fn(i);
        });
    for (std::thread& th : pool) th.join();
}

struct CycleOutcome {
    std::string line;  // compact JSON line on success
    std::optional<SoftFailure> failure;
};

int run_measure(const IngestOpts& o, const std::string& output, std::uint64_t seed, int jobs) {
    echonle::Thresholds t = load_thresholds(o);
    std::optional<echonle::Polygon> sector;
    if (!o.sector_path.empty()) sector = load_sector(o.sector_path);

    std::vector<SoftFailure> soft;
    std::vector<echonle::CardiacCycle> cycles = load_cycles(o, soft);
    size_t total = cycles.size() + soft.size();

    std::vector<CycleOutcome> results(cycles.size());
    parallel_for(int(cycles.size()), jobs, [&](int i) {
        try {
            echonle::AttributeVector v = echonle::compute_attribute_vector(cycles[size_t(i)], sector, t);
            json obj = json::parse(echonle::attribute_vector_to_json(v));
            obj["seed"] = seed;
            results[size_t(i)].line = obj.dump() + "\n";
        } catch (const echonle::Error& e) {
            results[size_t(i)].failure = {cycles[size_t(i)].video_id, e.kind(), e.what()};
        }
    });

    std::string out;
    for (CycleOutcome& r : results) {
        if (r.failure)
            soft.push_back(*r.failure);
        else
            out += r.line;
    }
    write_output(output, out);
    report_soft_failures("measure", soft, total);
    if (!soft.empty() && out.empty())
        throw echonle::Error(soft.front().kind, soft.front().source + ": " + soft.front().message);
    return 0;
}

int run_ef(const IngestOpts& o, const std::string& output, std::uint64_t seed, int n_disks) {
    std::vector<SoftFailure> soft;
    std::vector<echonle::CardiacCycle> cycles = load_cycles(o, soft);
    size_t total = cycles.size() + soft.size();

    std::string out;
    for (const echonle::CardiacCycle& c : cycles) {
        try {
            auto [ed, es] = echonle::order_ed_es(c.ed, c.es);
            double scale = ed.spacing * ed.spacing * ed.spacing;
            echonle::VolumePair vols{echonle::disk_volume(ed, n_disks) * scale,
                                     echonle::disk_volume(es, n_disks) * scale};
            json obj;
            obj["video_id"] = c.video_id;
            obj["edv"] = vols.edv;
            obj["esv"] = vols.esv;
            obj["ef_percent"] = echonle::ejection_fraction(vols);
            obj["reference_ef"] = c.reference ? json(c.reference->ef) : json(nullptr);
            obj["seed"] = seed;
            out += obj.dump() + "\n";
        } catch (const echonle::Error& e) {
            soft.push_back({c.video_id, e.kind(), e.what()});
        }
    }
    write_output(output, out);
    report_soft_failures("ef", soft, total);
    if (!soft.empty() && out.empty())
        throw echonle::Error(soft.front().kind, soft.front().source + ": " + soft.front().message);
    return 0;
}

int run_narrate(const IngestOpts& o, bool from_vectors, const std::string& registry_path,
                const std::string& output, std::uint64_t seed, bool online,
                const std::string& endpoint_path) {
    echonle::AttributeRegistry registry =
        registry_path.empty() ? echonle::default_registry()
                              : echonle::registry_from_json(read_file(registry_path));
    echonle::Thresholds t = load_thresholds(o);

    std::vector<echonle::AttributeVector> vectors;
    std::vector<SoftFailure> soft;
    if (from_vectors) {
        for (const std::string& path : o.inputs) {
            std::istringstream in(read_file(path));
            std::string line;
            int line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                try {
                    vectors.push_back(echonle::attribute_vector_from_json(line));
                } catch (const echonle::Error& e) {
                    soft.push_back({path + ":" + std::to_string(line_no), e.kind(), e.what()});
                }
            }
        }
    } else {
        std::optional<echonle::Polygon> sector;
        if (!o.sector_path.empty()) sector = load_sector(o.sector_path);
        for (echonle::CardiacCycle& c : load_cycles(o, soft)) {
            try {
                vectors.push_back(echonle::compute_attribute_vector(c, sector, t));
            } catch (const echonle::Error& e) {
                soft.push_back({c.video_id, e.kind(), e.what()});
            }
        }
    }

    std::optional<echonle::EndpointConfig> endpoint;
    if (online) {
        if (endpoint_path.empty())
            throw echonle::Error(echonle::ErrorKind::SchemaError,
                                 "--online requires --endpoint <config.json>");
        endpoint = echonle::endpoint_from_json(read_file(endpoint_path));
        endpoint->online = true;
    }

    std::string out;
    bool refinement_failed = false;
    for (const echonle::AttributeVector& v : vectors) {
        echonle::NarrativeBundle bundle = echonle::make_bundle(v, registry, seed, t);
        json obj = json::parse(echonle::bundle_to_json(bundle));
        obj["video_id"] = v.video_id;
        if (endpoint && !refinement_failed) {
            try {
                obj["refined_text"] = echonle::refine_explanation(*endpoint, bundle.refinement_prompt);
            } catch (const echonle::Error& e) {
                std::cerr << "echonle narrate: refinement aborted: " << e.what() << "\n";
                refinement_failed = true;
            }
        }
        out += obj.dump() + "\n";
    }
    write_output(output, out);
    report_soft_failures("narrate", soft, vectors.size() + soft.size());
    if (!soft.empty() && out.empty())
        throw echonle::Error(soft.front().kind, soft.front().source + ": " + soft.front().message);
    return refinement_failed ? 3 : 0;
}

int run_evaluate(const std::string& input, const std::string& registry_path,
                 const std::string& queries_path, const std::string& output, bool table,
                 std::uint64_t seed, bool online, const std::string& endpoint_path) {
    echonle::AttributeRegistry registry =
        registry_path.empty() ? echonle::default_registry()
                              : echonle::registry_from_json(read_file(registry_path));
    std::vector<echonle::EvalPair> pairs = echonle::parse_eval_pairs(read_file(input));

    echonle::EvalReport report;
    if (online) {
        if (endpoint_path.empty())
            throw echonle::Error(echonle::ErrorKind::SchemaError,
                                 "--online requires --endpoint <config.json>");
        echonle::LlmExtractor extractor;
        extractor.config = echonle::endpoint_from_json(read_file(endpoint_path));
        extractor.config.online = true;
        if (!queries_path.empty())
            extractor.queries = echonle::queries_from_json(read_file(queries_path));

        std::vector<echonle::ExtractionOutcome> outcomes;
        std::vector<std::string> texts;
        for (const echonle::EvalPair& p : pairs) {
            echonle::AttributeStatusSet gt =
                echonle::extract_statuses(p.gt_text, registry, echonle::RuleBasedExtractor{});
            echonle::AttributeStatusSet pred = echonle::extract_statuses(p.pred_text, registry, extractor);
            echonle::ExtractionOutcome outcome = echonle::compare_statuses(gt, pred);
            outcome.sample_id = p.id;
            outcomes.push_back(std::move(outcome));
            texts.push_back(p.pred_text);
        }
        report = echonle::aggregate(outcomes, texts);
    } else {
        report = echonle::evaluate_pairs(pairs, registry);
    }
    report.seed = seed;

    if (table) {
        std::cout << echonle::report_to_table(report);
        if (!output.empty() && output != "-") write_output(output, echonle::report_to_json(report));
    } else {
        write_output(output, echonle::report_to_json(report));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"left-ventricle contour measurement, narration and explanation scoring"};
    app.set_version_flag("--version", "echonle 0.1.0");
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string output;
    app.add_option("--seed", seed, "seed recorded in every output")->capture_default_str();
    app.add_option("--output,-o", output, "output file, - or empty for stdout");

    IngestOpts measure_opts;
    int jobs = 1;
    CLI::App* measure = app.add_subcommand("measure", "compute attribute vectors for cycles");
    add_ingest_options(measure, measure_opts);
    measure->add_option("--jobs", jobs, "parallel cycles")->check(CLI::PositiveNumber);

    IngestOpts ef_opts;
    int n_disks = 20;
    CLI::App* ef = app.add_subcommand("ef", "volumes and ejection fraction only");
    add_ingest_options(ef, ef_opts);
    ef->add_option("--disks", n_disks, "disk count for the volume sum")->check(CLI::PositiveNumber);

    IngestOpts narrate_opts;
    bool from_vectors = false;
    std::string registry_path, endpoint_path;
    bool online = false;
    CLI::App* narrate = app.add_subcommand("narrate", "generate explanation bundles");
    add_ingest_options(narrate, narrate_opts);
    narrate->add_flag("--vectors", from_vectors, "inputs are measure output (JSON lines)");
    narrate->add_option("--registry", registry_path, "attribute registry JSON")
        ->check(CLI::ExistingFile);
    narrate->add_flag("--online", online, "allow endpoint use for refinement");
    narrate->add_option("--endpoint", endpoint_path, "endpoint config JSON")
        ->check(CLI::ExistingFile);

    std::string eval_input, eval_registry, queries_path, eval_endpoint;
    bool eval_online = false, table = false;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score prediction texts against ground truth");
    evaluate->fallthrough();
    evaluate->add_option("input", eval_input, "JSON lines {id, gt_text, pred_text}")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate->add_option("--registry", eval_registry, "attribute registry JSON")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--queries", queries_path, "judge query JSON (online mode)")
        ->check(CLI::ExistingFile);
    evaluate->add_flag("--online", eval_online, "use the LLM judge for predictions");
    evaluate->add_option("--endpoint", eval_endpoint, "endpoint config JSON")
        ->check(CLI::ExistingFile);
    evaluate->add_flag("--table", table, "print the plain-text table instead of JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // argument problems are input errors
    }

    try {
        if (app.got_subcommand(measure)) return run_measure(measure_opts, output, seed, jobs);
        if (app.got_subcommand(ef)) return run_ef(ef_opts, output, seed, n_disks);
        if (app.got_subcommand(narrate))
            return run_narrate(narrate_opts, from_vectors, registry_path, output, seed, online,
                               endpoint_path);
        if (app.got_subcommand(evaluate))
            return run_evaluate(eval_input, eval_registry, queries_path, output, table, seed,
                                eval_online, eval_endpoint);
    } catch (const echonle::Error& e) {
        std::cerr << "echonle: " << e.what() << "\n";
        return echonle::error_exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "echonle: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
