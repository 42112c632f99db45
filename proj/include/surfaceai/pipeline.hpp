#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "surfaceai/aggregation.hpp"
#include "surfaceai/errors.hpp"
#include "surfaceai/road_network.hpp"

namespace surfaceai::pipeline {

class UsageError : public Error {
public:
    using Error::Error;
};

// A pipeline stage failed; `stage()` is one of config, network, imagery,
// backend, assignment, aggregation, export.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

enum class OutputFormat { geojson, csv, both };

struct PipelineConfig {
    std::string boundary;                // bbox "minLon,minLat,maxLon,maxLat" or polygon file
    std::filesystem::path network;       // GeoJSON or Overpass JSON
    std::string images;                  // "live", fixture directory, or NDJSON record file
    std::string backend;                 // prediction CSV or http(s):// endpoint
    double subsegment_m = 20.0;
    int min_agreeing = 3;
    double min_fraction = 0.5;
    double radius_m = 10.0;
    std::optional<std::int64_t> date_min;  // ms since epoch
    double min_confidence = 0.0;
    std::filesystem::path out_dir = "surfaceai-out";
    OutputFormat format = OutputFormat::both;
    bool placements_audit = false;
    bool lenient_predictions = false;
    unsigned threads = 1;
    std::size_t batch_size = 100;
    std::size_t requests_per_minute = 60;
    std::optional<std::size_t> page_limit;
    network::RoadTypeMapping road_types;

    aggregation::Config aggregation_config() const {
        return {subsegment_m, min_agreeing, min_fraction, min_confidence};
    }
};

// Throws UsageError when a threshold is out of range or an input is unset.
void validate(const PipelineConfig& config);

// Applies one `key = value` setting. Keys mirror the long CLI flag names
// (`radius-m`, `min-agreeing`, ...); `road-type.<highway>` overrides the
// highway mapping with a road-type class or `none`. Throws UsageError.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);

// Flat `key = value` lines; `#` starts a comment. Order is preserved.
std::vector<std::pair<std::string, std::string>> parse_config(std::string_view text);

// "YYYY-MM-DD" (UTC midnight) or integer milliseconds since epoch.
std::int64_t parse_timestamp(std::string_view text);

struct RunSummary {
    std::size_t network_segments = 0;
    network::ParseStats network_stats;
    std::size_t images_fetched = 0;
    std::size_t images_without_prediction = 0;
    std::size_t prediction_duplicates = 0;
    std::size_t discarded_no_focus = 0;
    std::size_t discarded_out_of_range = 0;
    std::size_t placements = 0;
    std::map<std::string, std::size_t> placements_by_disambiguation;
    std::map<std::string, std::size_t> segments_by_status;
    double coverage = 0.0;
    std::vector<std::filesystem::path> outputs;
};

std::string to_json(const RunSummary& summary);
std::string to_text(const RunSummary& summary);

// ingest -> predict -> assign -> aggregate -> export. Outputs land in
// config.out_dir only if every stage succeeds.
RunSummary run_pipeline(const PipelineConfig& config);

// One LineString feature per segment carrying its tags plus the aggregate.
std::string export_geojson(const std::vector<aggregation::SegmentAggregate>& aggregates,
                           const network::RoadNetwork& network);
// segment_id,surface_type,quality_mean,quality_class,status
std::string export_csv(const std::vector<aggregation::SegmentAggregate>& aggregates);
// Reads the CSV export back (subsegment detail is not part of it).
std::vector<aggregation::SegmentAggregate> parse_export_csv(std::string_view contents);

} // namespace surfaceai::pipeline
