#include "surfaceai/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <nlohmann/json.hpp>

#include "surfaceai/assignment.hpp"
#include "surfaceai/imagery.hpp"
#include "surfaceai/metrics.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::pipeline {

namespace fs = std::filesystem;

namespace {

template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

bool is_http(std::string_view s) { return s.starts_with("http://") || s.starts_with("https://"); }

std::vector<imagery::ImageRecord> ingest(const PipelineConfig& c, const geo::BBox& bbox) {
    imagery::FetchOptions opts;
    opts.date_min = c.date_min;
    opts.page_limit = c.page_limit;
    opts.requests_per_minute = c.requests_per_minute;
    if (c.images == "live") {
        imagery::SteadyClock clock;
        return imagery::fetch_images(bbox, imagery::token_from_env(), opts, clock).records;
    }
    if (fs::is_directory(c.images)) return imagery::load_fixture_store(c.images)(bbox, opts).records;

    // A cached record file: apply the same filters a fetch would have.
    auto records = imagery::load_records(c.images);
    std::erase_if(records, [&](const imagery::ImageRecord& r) {
        return !bbox.contains(r.position) || (c.date_min && r.captured_at < *c.date_min);
    });
    return records;
}

PredictionMap predict(const PipelineConfig& c, const std::vector<imagery::ImageRecord>& images,
                      RunSummary& summary) {
    if (is_http(c.backend)) {
        std::vector<std::string> ids;
        ids.reserve(images.size());
        for (const auto& r : images) ids.push_back(r.image_id);
        classifier::HttpOptions opts;
        opts.batch_size = c.batch_size;
        return classifier::HttpPredictor(c.backend, opts).predict(ids).predictions;
    }
    if (!fs::exists(c.backend)) throw Error("prediction file not found: " + c.backend);
    classifier::LoadReport report;
    auto all = classifier::load_predictions_file(
        c.backend, c.lenient_predictions ? classifier::RowPolicy::lenient : classifier::RowPolicy::fail_fast,
        &report);
    summary.prediction_duplicates = report.duplicates;
    // Keep only predictions for images in this run.
    PredictionMap out;
    for (const auto& r : images) {
        if (auto it = all.find(r.image_id); it != all.end()) out.emplace(it->first, it->second);
    }
    return out;
}

// Writes every file or none of them.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }
    void write(const std::string& name, std::string_view contents) {
        const auto path = dir_ / name;
        text::write_file_atomic(path, contents);
        written_.push_back(path);
    }
    void commit() { committed_ = true; }
    const std::vector<fs::path>& written() const { return written_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

} // namespace

RunSummary run_pipeline(const PipelineConfig& config) {
    stage("config", [&] { validate(config); });
    RunSummary summary;

    const auto net = stage("network", [&] {
        const auto boundary = network::load_boundary(config.boundary);
        network::ParseOptions po;
        po.mapping = config.road_types;
        return network::load_network(config.network, boundary, po);
    });
    summary.network_segments = net.segments().size();
    summary.network_stats = net.stats();
    if (net.segments().empty()) throw StageError("network", "no road segments inside the boundary");

    const auto images = stage("imagery", [&] { return ingest(config, net.boundary().bbox); });
    summary.images_fetched = images.size();

    const auto predictions = stage("backend", [&] { return predict(config, images, summary); });

    const auto assigned = stage("assignment", [&] {
        std::vector<assignment::ImageInput> inputs;
        inputs.reserve(images.size());
        for (const auto& r : images) {
            const auto it = predictions.find(r.image_id);
            if (it == predictions.end()) {
                ++summary.images_without_prediction;
                continue;
            }
            inputs.push_back({&r, &it->second});
        }
        const auto index = net.build_index(config.radius_m);
        return assignment::assign_images(inputs, net, index, config.radius_m, config.threads);
    });
    for (const auto& d : assigned.discards) {
        if (d.reason == assignment::DiscardReason::no_focus)
            ++summary.discarded_no_focus;
        else
            ++summary.discarded_out_of_range;
    }
    summary.placements = assigned.placements.size();
    for (const auto& p : assigned.placements)
        ++summary.placements_by_disambiguation[std::string(to_string(p.disambiguation))];

    const auto aggregates = stage("aggregation", [&] {
        return aggregation::aggregate_network(assigned.placements, predictions, net,
                                              config.aggregation_config());
    });
    for (const auto s : {aggregation::Status::ok, aggregation::Status::insufficient_coverage,
                         aggregation::Status::ambiguous_type, aggregation::Status::no_images})
        summary.segments_by_status[std::string(to_string(s))] = 0;
    for (const auto& a : aggregates) ++summary.segments_by_status[std::string(to_string(a.status))];
    summary.coverage = metrics::coverage(aggregates);

    stage("export", [&] {
        fs::create_directories(config.out_dir);
        OutputSet out(config.out_dir);
        if (config.format != OutputFormat::csv) out.write("segments.geojson", export_geojson(aggregates, net));
        if (config.format != OutputFormat::geojson) out.write("segments.csv", export_csv(aggregates));
        if (config.placements_audit) out.write("placements.csv", assignment::to_audit_csv(assigned.placements));
        summary.outputs = out.written();
        summary.outputs.push_back(config.out_dir / "summary.json");
        out.write("summary.json", to_json(summary));
        out.commit();
    });
    return summary;
}

std::string to_json(const RunSummary& s) {
    using nlohmann::json;
    const auto& ns = s.network_stats;
    json outputs = json::array();
    for (const auto& p : s.outputs) outputs.push_back(p.filename().string());
    json j = {
        {"network",
         {{"segments", s.network_segments},
          {"features", ns.features},
          {"skipped_non_line", ns.skipped_non_line},
          {"skipped_bad_geometry", ns.skipped_bad_geometry},
          {"dropped_no_highway", ns.dropped_no_highway},
          {"dropped_outside", ns.dropped_outside},
          {"dropped_duplicate_id", ns.dropped_duplicate_id}}},
        {"images",
         {{"fetched", s.images_fetched},
          {"without_prediction", s.images_without_prediction},
          {"prediction_duplicates", s.prediction_duplicates},
          {"discarded", {{"no_focus", s.discarded_no_focus}, {"out_of_range", s.discarded_out_of_range}}},
          {"placed", s.placements},
          {"placed_by", s.placements_by_disambiguation}}},
        {"segments", s.segments_by_status},
        {"coverage", s.coverage},
        {"outputs", outputs}};
    return j.dump(2) + "\n";
}

std::string to_text(const RunSummary& s) {
    std::ostringstream os;
    os << "network: " << s.network_segments << " segments (" << s.network_stats.features << " features read)\n";
    os << "images: " << s.images_fetched << " fetched, " << s.images_without_prediction
       << " without prediction, " << s.discarded_no_focus << " no_focus, " << s.discarded_out_of_range
       << " out_of_range, " << s.placements << " placed\n";
    os << "segments:";
    for (const auto& [status, n] : s.segments_by_status) os << ' ' << status << '=' << n;
    os << "\ncoverage: " << text::format_double(std::round(s.coverage * 1e4) / 1e4) << '\n';
    for (const auto& p : s.outputs) os << "wrote " << p.string() << '\n';
    return os.str();
}

} // namespace surfaceai::pipeline
