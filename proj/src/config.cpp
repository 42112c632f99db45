#include <chrono>
#include <cmath>

#include "surfaceai/pipeline.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::pipeline {

namespace {

double as_double(const std::string& key, const std::string& value) {
    double v = 0;
    if (!text::parse_double(text::trim(value), v) || !std::isfinite(v))
        throw UsageError(key + ": expected a number, got '" + value + "'");
    return v;
}

long long as_int(const std::string& key, const std::string& value) {
    long long v = 0;
    if (!text::parse_int64(text::trim(value), v))
        throw UsageError(key + ": expected an integer, got '" + value + "'");
    return v;
}

std::size_t as_count(const std::string& key, const std::string& value) {
    const auto v = as_int(key, value);
    if (v < 1) throw UsageError(key + ": must be at least 1");
    return static_cast<std::size_t>(v);
}

bool as_bool(const std::string& key, const std::string& value) {
    const auto v = text::trim(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw UsageError(key + ": expected true or false, got '" + value + "'");
}

} // namespace

std::int64_t parse_timestamp(std::string_view s) {
    s = text::trim(s);
    long long ms = 0;
    if (text::parse_int64(s, ms)) return ms;
    long long y = 0, m = 0, d = 0;
    if (s.size() == 10 && s[4] == '-' && s[7] == '-' && text::parse_int64(s.substr(0, 4), y) &&
        text::parse_int64(s.substr(5, 2), m) && text::parse_int64(s.substr(8, 2), d)) {
        const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(y)),
                                              std::chrono::month(static_cast<unsigned>(m)),
                                              std::chrono::day(static_cast<unsigned>(d))};
        if (ymd.ok()) {
            const std::chrono::sys_days days{ymd};
            return std::chrono::duration_cast<std::chrono::milliseconds>(days.time_since_epoch()).count();
        }
    }
    throw UsageError("expected YYYY-MM-DD or epoch milliseconds, got '" + std::string(s) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_config(std::string_view contents) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        auto line = contents.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = text::trim(line.substr(0, eq));
        auto value = text::trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
        out.emplace_back(std::string(key), std::string(value));
    }
    return out;
}

void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value) {
    static constexpr std::string_view kRoadType = "road-type.";
    if (key == "bbox" || key == "boundary") {
        c.boundary = value;
    } else if (key == "network") {
        c.network = value;
    } else if (key == "images") {
        c.images = value;
    } else if (key == "backend") {
        c.backend = value;
    } else if (key == "radius-m") {
        c.radius_m = as_double(key, value);
    } else if (key == "subsegment-m") {
        c.subsegment_m = as_double(key, value);
    } else if (key == "min-agreeing") {
        c.min_agreeing = static_cast<int>(as_int(key, value));
    } else if (key == "min-fraction") {
        c.min_fraction = as_double(key, value);
    } else if (key == "min-confidence") {
        c.min_confidence = as_double(key, value);
    } else if (key == "date-min") {
        c.date_min = parse_timestamp(value);
    } else if (key == "out") {
        c.out_dir = value;
    } else if (key == "format") {
        if (value == "geojson")
            c.format = OutputFormat::geojson;
        else if (value == "csv")
            c.format = OutputFormat::csv;
        else if (value == "both")
            c.format = OutputFormat::both;
        else
            throw UsageError("format: expected geojson, csv or both, got '" + value + "'");
    } else if (key == "placements-audit") {
        c.placements_audit = as_bool(key, value);
    } else if (key == "lenient") {
        c.lenient_predictions = as_bool(key, value);
    } else if (key == "threads") {
        c.threads = static_cast<unsigned>(as_count(key, value));
    } else if (key == "batch-size") {
        c.batch_size = as_count(key, value);
    } else if (key == "rpm") {
        c.requests_per_minute = as_count(key, value);
    } else if (key == "page-limit") {
        c.page_limit = as_count(key, value);
    } else if (key.starts_with(kRoadType) && key.size() > kRoadType.size()) {
        auto highway = key.substr(kRoadType.size());
        if (value == "none") {
            c.road_types.set(std::move(highway), std::nullopt);
        } else {
            const auto rt = parse_road_type(value);
            if (!rt || *rt == RoadType::no_focus || *rt == RoadType::bike_lane)
                throw UsageError(key + ": '" + value + "' is not a network road type");
            c.road_types.set(std::move(highway), rt);
        }
    } else {
        throw UsageError("unknown setting '" + key + "'");
    }
}

void validate(const PipelineConfig& c) {
    if (!(c.subsegment_m > 0)) throw UsageError("subsegment-m must be positive");
    if (!(c.radius_m > 0)) throw UsageError("radius-m must be positive");
    if (c.min_agreeing < 1) throw UsageError("min-agreeing must be at least 1");
    if (!(c.min_fraction > 0 && c.min_fraction <= 1)) throw UsageError("min-fraction must be in (0, 1]");
    if (!(c.min_confidence >= 0 && c.min_confidence <= 1))
        throw UsageError("min-confidence must be in [0, 1]");
    if (c.boundary.empty()) throw UsageError("no boundary given (--bbox)");
    if (c.network.empty()) throw UsageError("no road network given (--network)");
    if (c.images.empty()) throw UsageError("no imagery source given (--images)");
    if (c.backend.empty()) throw UsageError("no classifier backend given (--backend)");
}

} // namespace surfaceai::pipeline
