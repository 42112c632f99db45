#include "cli.hpp"

#include <CLI11.hpp>
#include <map>
#include <nlohmann/json.hpp>

#include "surfaceai/classifier.hpp"
#include "surfaceai/imagery.hpp"
#include "surfaceai/metrics.hpp"
#include "surfaceai/pipeline.hpp"
#include "surfaceai/synthlab.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::cli {

namespace {

namespace fs = std::filesystem;
using pipeline::StageError;
using pipeline::UsageError;

template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

// Pipeline settings exposed as flags; the flag name is the setting key.
struct PipelineFlags {
    std::string config_file;
    std::map<std::string, std::string> values;
    std::vector<std::string> road_types;
    bool placements_audit = false;
    bool lenient = false;
    std::vector<CLI::Option*> options;
    CLI::Option* audit_opt = nullptr;
    CLI::Option* lenient_opt = nullptr;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "Flat key = value settings file");
        static const std::vector<std::pair<std::string, std::string>> keys = {
            {"bbox", "minLon,minLat,maxLon,maxLat or a GeoJSON polygon file"},
            {"network", "Road network (GeoJSON or Overpass JSON)"},
            {"images", "live, a fixture directory or an NDJSON record file"},
            {"backend", "Prediction CSV or http(s):// inference endpoint"},
            {"radius-m", "Assignment search radius in meters (10)"},
            {"subsegment-m", "Subsegment length in meters (20)"},
            {"min-agreeing", "Agreeing votes a subsegment needs (3)"},
            {"min-fraction", "Classified share of subsegments a segment needs (0.5)"},
            {"min-confidence", "Drop votes below this surface type confidence (0)"},
            {"date-min", "Ignore images captured before YYYY-MM-DD"},
            {"out", "Output directory"},
            {"format", "geojson, csv or both"},
            {"threads", "Assignment worker threads"},
            {"batch-size", "Images per inference request (100)"},
            {"rpm", "Imagery API requests per minute (60)"},
            {"page-limit", "Stop after this many imagery pages"},
        };
        for (const auto& [key, help] : keys) options.push_back(app.add_option("--" + key, values[key], help));
        app.add_option("--road-type", road_types, "highway=class override (class or none)");
        audit_opt = app.add_flag("--placements-audit", placements_audit, "Also write placements.csv");
        lenient_opt = app.add_flag("--lenient", lenient, "Skip malformed prediction rows");
    }

    // Defaults, then the config file, then explicit flags.
    pipeline::PipelineConfig resolve() const {
        pipeline::PipelineConfig c;
        if (!config_file.empty()) {
            std::string contents;
            try {
                contents = text::read_file(config_file);
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            for (const auto& [k, v] : pipeline::parse_config(contents)) pipeline::apply_setting(c, k, v);
        }
        for (const auto* opt : options) {
            if (opt->count() == 0) continue;
            const auto key = opt->get_name().substr(2);
            pipeline::apply_setting(c, key, values.at(key));
        }
        for (const auto& rt : road_types) {
            const auto eq = rt.find('=');
            if (eq == std::string::npos) throw UsageError("--road-type expects highway=class, got '" + rt + "'");
            pipeline::apply_setting(c, "road-type." + rt.substr(0, eq), rt.substr(eq + 1));
        }
        if (audit_opt->count()) c.placements_audit = placements_audit;
        if (lenient_opt->count()) c.lenient_predictions = lenient;
        pipeline::validate(c);
        return c;
    }
};

std::string manifest_json(const imagery::FetchManifest& m) {
    using nlohmann::json;
    auto opt = [](const std::optional<std::int64_t>& v) { return v ? json(*v) : json(); };
    json j = {{"bbox", network::format_bbox(m.boundary)},
              {"source", m.source == imagery::Source::live_api ? "live_api" : "fixture"},
              {"fetched_count", m.fetched_count},
              {"pages", m.pages},
              {"raw_records", m.raw_records},
              {"duplicates", m.duplicates},
              {"malformed", m.malformed},
              {"filtered_date", m.filtered_date},
              {"filtered_bbox", m.filtered_bbox},
              {"retries", m.retries},
              {"min_captured_at", opt(m.min_captured_at)},
              {"max_captured_at", opt(m.max_captured_at)}};
    return j.dump(2) + "\n";
}

struct FetchArgs {
    std::string bbox, images = "live", date_min, out, thumbnails;
    std::size_t page_limit = 0, rpm = 60;
};

int do_fetch(const FetchArgs& a, std::ostream& out) {
    const auto boundary = stage("network", [&] { return network::load_boundary(a.bbox); });
    imagery::FetchOptions opts;
    if (!a.date_min.empty()) opts.date_min = pipeline::parse_timestamp(a.date_min);
    if (a.page_limit > 0) opts.page_limit = a.page_limit;
    opts.requests_per_minute = a.rpm;
    opts.want_thumbnails = !a.thumbnails.empty();
    const auto result = stage("imagery", [&] {
        if (a.images == "live") {
            imagery::SteadyClock clock;
            return imagery::fetch_images(boundary.bbox, imagery::token_from_env(), opts, clock);
        }
        return imagery::load_fixture_store(a.images)(boundary.bbox, opts);
    });
    stage("export", [&] {
        text::write_file_atomic(a.out, imagery::to_ndjson(result.records));
        text::write_file_atomic(a.out + ".manifest.json", manifest_json(result.manifest));
        if (!a.thumbnails.empty() && !result.thumbnail_urls.empty()) {
            fs::create_directories(a.thumbnails);
            imagery::LiveTransport transport(imagery::token_from_env());
            imagery::download_thumbnails(result.thumbnail_urls, transport, a.thumbnails);
        }
    });
    out << "fetched " << result.records.size() << " images in " << result.manifest.pages << " pages ("
        << result.manifest.duplicates << " duplicates, " << result.manifest.malformed << " malformed)\n";
    return kOk;
}

struct ClassifyArgs {
    std::string images, backend, out;
    std::size_t batch_size = 100;
};

int do_classify(const ClassifyArgs& a, std::ostream& out) {
    if (!a.backend.starts_with("http://") && !a.backend.starts_with("https://"))
        throw UsageError("--backend must be an http(s):// endpoint for classify");
    const auto records = stage("imagery", [&] { return imagery::load_records(a.images); });
    std::vector<std::string> ids;
    for (const auto& r : records) ids.push_back(r.image_id);
    classifier::HttpOptions opts;
    opts.batch_size = a.batch_size;
    const auto result = stage("backend", [&] { return classifier::HttpPredictor(a.backend, opts).predict(ids); });
    stage("export", [&] { text::write_file_atomic(a.out, classifier::to_predictions_csv(result.predictions)); });
    out << "classified " << result.predictions.size() << " of " << ids.size() << " images";
    if (!result.missing.empty()) out << " (" << result.missing.size() << " without a response)";
    out << '\n';
    return kOk;
}

int do_run(const pipeline::PipelineConfig& c, std::ostream& out) {
    out << pipeline::to_text(pipeline::run_pipeline(c));
    return kOk;
}

struct EvaluateArgs {
    std::string segments, truth, out;
};

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const auto aggregates = stage("aggregation", [&] {
        auto v = pipeline::parse_export_csv(text::read_file(a.segments));
        return v;
    });
    const auto truth = stage("evaluation", [&] { return metrics::load_truth_file(a.truth); });
    const auto report = metrics::evaluate(aggregates, truth);
    if (!a.out.empty()) stage("export", [&] { text::write_file_atomic(a.out, metrics::to_json(report)); });
    out << metrics::to_text(report);
    return kOk;
}

struct SynthArgs {
    synthlab::ScenarioSpec spec;
    std::string layout = "rows";
    std::string out;
};

int do_synth(SynthArgs a, std::ostream& out) {
    if (a.layout == "grid")
        a.spec.layout = synthlab::Layout::grid;
    else if (a.layout != "rows")
        throw UsageError("--layout must be rows or grid");
    try {
        synthlab::validate(a.spec);
    } catch (const ContractViolation& e) {
        throw UsageError(e.what());
    }
    const auto scenario = synthlab::generate_scenario(a.spec);
    const auto files = stage("export", [&] { return synthlab::write_scenario(scenario, a.out); });
    out << "wrote " << scenario.network.segments().size() << " segments and " << scenario.images.size()
        << " images to " << a.out << "\n";
    out << "run with: --bbox " << files.boundary.string() << " --network " << files.network.string()
        << " --images " << files.images.string() << " --backend " << files.predictions.string() << '\n';
    return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Road surface type and quality mapping from street-level imagery"};
    app.name(args.empty() ? "surfaceai" : args.front());
    app.require_subcommand(1);

    FetchArgs fetch;
    auto* fetch_cmd = app.add_subcommand("fetch", "Download image metadata for an area");
    fetch_cmd->add_option("--bbox", fetch.bbox, "minLon,minLat,maxLon,maxLat or polygon file")->required();
    fetch_cmd->add_option("--images", fetch.images, "live (token from the environment) or a fixture directory");
    fetch_cmd->add_option("--date-min", fetch.date_min, "Ignore images captured before YYYY-MM-DD");
    fetch_cmd->add_option("--page-limit", fetch.page_limit, "Stop after this many pages");
    fetch_cmd->add_option("--rpm", fetch.rpm, "Requests per minute")->check(CLI::PositiveNumber);
    fetch_cmd->add_option("--thumbnails", fetch.thumbnails, "Also download thumbnails into this directory");
    fetch_cmd->add_option("--out", fetch.out, "NDJSON output file")->required();

    ClassifyArgs classify;
    auto* classify_cmd = app.add_subcommand("classify", "Request predictions from an inference service");
    classify_cmd->add_option("--images", classify.images, "NDJSON image records")->required();
    classify_cmd->add_option("--backend", classify.backend, "http(s):// inference endpoint")->required();
    classify_cmd->add_option("--batch-size", classify.batch_size, "Images per request")->check(CLI::PositiveNumber);
    classify_cmd->add_option("--out", classify.out, "Prediction CSV output")->required();

    PipelineFlags aggregate_flags;
    auto* aggregate_cmd =
        app.add_subcommand("aggregate", "Assign and aggregate cached images and predictions");
    aggregate_flags.attach(*aggregate_cmd);

    PipelineFlags run_flags;
    auto* run_cmd = app.add_subcommand("run", "Fetch, classify, assign, aggregate and export");
    run_flags.attach(*run_cmd);

    EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score segment outputs against labeled truth");
    evaluate_cmd->add_option("--segments", evaluate.segments, "segments.csv from aggregate or run")->required();
    evaluate_cmd->add_option("--truth", evaluate.truth, "Truth CSV")->required();
    evaluate_cmd->add_option("--out", evaluate.out, "Write the report as JSON");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scenario with known truth");
    synth_cmd->add_option("--seed", synth.spec.seed);
    synth_cmd->add_option("--segments", synth.spec.n_segments)->check(CLI::PositiveNumber);
    synth_cmd->add_option("--images-min", synth.spec.images_per_subsegment_min);
    synth_cmd->add_option("--images-max", synth.spec.images_per_subsegment_max);
    synth_cmd->add_option("--type-noise", synth.spec.type_noise_rate);
    synth_cmd->add_option("--quality-noise", synth.spec.quality_noise_sd);
    synth_cmd->add_option("--geotag-noise", synth.spec.geotag_noise_sd_m);
    synth_cmd->add_option("--drop-rate", synth.spec.drop_rate);
    synth_cmd->add_option("--road-type-noise", synth.spec.road_type_noise_rate);
    synth_cmd->add_option("--no-focus-rate", synth.spec.no_focus_rate);
    synth_cmd->add_flag("--parallel-roads", synth.spec.parallel_roads);
    synth_cmd->add_option("--layout", synth.layout, "rows or grid");
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();

    std::vector<std::string> argv_rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(argv_rest.begin(), argv_rest.end());
    try {
        app.parse(std::move(argv_rest));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        if (const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front())
            err << "run '" << sub->get_name() << " --help' for usage\n";
        return kUsage;
    }

    try {
        if (*fetch_cmd) return do_fetch(fetch, out);
        if (*classify_cmd) return do_classify(classify, out);
        if (*aggregate_cmd) {
            auto c = aggregate_flags.resolve();
            if (c.images == "live" || fs::is_directory(c.images))
                throw UsageError("aggregate needs a cached image file (--images *.ndjson)");
            if (c.backend.starts_with("http://") || c.backend.starts_with("https://"))
                throw UsageError("aggregate needs a prediction CSV (--backend *.csv)");
            return do_run(c, out);
        }
        if (*run_cmd) return do_run(run_flags.resolve(), out);
        if (*evaluate_cmd) return do_evaluate(evaluate, out);
        if (*synth_cmd) return do_synth(synth, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const StageError& e) {
        err << "error: stage " << e.what() << '\n';
        return kStageFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kStageFailure;
    }
    return kUsage;
}

} // namespace surfaceai::cli
