#include "surfaceai/road_network.hpp"

#include <algorithm>
#include <set>
#include <nlohmann/json.hpp>

#include "surfaceai/errors.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::network {

using nlohmann::json;

namespace {

json parse_json(std::string_view doc) {
    try {
        return json::parse(doc);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), "byte " + std::to_string(e.byte));
    }
}

geo::GeoPoint coordinate(const json& c, const std::string& where) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
        throw ParseError("coordinate must be [lon, lat]", where);
    const geo::GeoPoint p{c[0].get<double>(), c[1].get<double>()};
    if (!geo::is_valid(p)) throw ParseError("coordinate out of range", where);
    return p;
}

std::vector<geo::GeoPoint> coordinate_list(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ParseError("coordinates must be an array", where);
    std::vector<geo::GeoPoint> out;
    out.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        out.push_back(coordinate(arr[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

geo::BBox bbox_of(const std::vector<geo::GeoPoint>& pts) {
    geo::BBox b{pts.front().lon, pts.front().lat, pts.front().lon, pts.front().lat};
    for (const auto& p : pts) {
        b.min_lon = std::min(b.min_lon, p.lon);
        b.min_lat = std::min(b.min_lat, p.lat);
        b.max_lon = std::max(b.max_lon, p.lon);
        b.max_lat = std::max(b.max_lat, p.lat);
    }
    return b;
}

std::string scalar_to_tag(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
    return v.dump();
}

const std::set<std::string, std::less<>> kReservedKeys = {"osm_way_id", "segment_id", "osm_id",
                                                          "@id", "id"};

Tags tags_from_properties(const json& props) {
    Tags tags;
    if (!props.is_object()) return tags;
    const json* source = &props;
    if (props.contains("tags") && props["tags"].is_object()) source = &props["tags"];
    for (const auto& [k, v] : source->items()) {
        if (source == &props && kReservedKeys.count(k)) continue;
        if (v.is_null() || v.is_object() || v.is_array()) continue;
        tags.emplace(k, scalar_to_tag(v));
    }
    return tags;
}

std::optional<std::int64_t> way_id_from(const json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (const auto slash = s.rfind('/'); slash != std::string::npos) s = s.substr(slash + 1);
        long long id = 0;
        if (text::parse_int64(s, id)) return id;
    }
    return std::nullopt;
}

// Explicit segment_id wins (keeps MultiLineString parts stable across
// export/re-parse), then the usual OSM id property spellings, then feature.id.
std::optional<SegmentId> feature_id(const json& feature, const json& props) {
    if (props.is_object()) {
        if (props.contains("segment_id") && props["segment_id"].is_string()) {
            try {
                return SegmentId::parse(props["segment_id"].get<std::string>());
            } catch (const ParseError&) {
            }
        }
        for (const char* key : {"osm_way_id", "osm_id", "@id", "id"})
            if (props.contains(key))
                if (auto id = way_id_from(props[key])) return SegmentId{*id, std::nullopt};
    }
    if (feature.contains("id"))
        if (auto id = way_id_from(feature["id"])) return SegmentId{*id, std::nullopt};
    return std::nullopt;
}

class Builder {
public:
    Builder(const Boundary& boundary, const ParseOptions& options)
        : boundary_(boundary), options_(options), frame_(boundary.frame()) {}

    void add(SegmentId id, std::vector<geo::GeoPoint> pts, Tags tags) {
        const auto hw = tags.find("highway");
        if (hw == tags.end()) {
            ++stats_.dropped_no_highway;
            return;
        }
        std::optional<geo::Polyline> line;
        try {
            line.emplace(std::move(pts));
        } catch (const ContractViolation&) {
            ++stats_.skipped_bad_geometry;
            return;
        }
        if (!geo::intersects(*line, boundary_.bbox)) {
            ++stats_.dropped_outside;
            return;
        }
        if (!seen_.insert(id).second) {
            ++stats_.dropped_duplicate_id;
            return;
        }
        RoadSegment seg{id, std::move(*line), hw->second, std::nullopt, std::nullopt, false, 0.0,
                        std::move(tags)};
        if (auto nm = seg.tags.find("name"); nm != seg.tags.end()) seg.name = nm->second;
        seg.mapped_road_type = map_highway_to_road_type(seg.highway, seg.tags, options_.mapping);
        seg.accepts_bike_lane = has_bike_lane(seg.tags);
        seg.length_m = seg.geometry.length(frame_);
        segments_.push_back(std::move(seg));
    }

    ParseStats& stats() { return stats_; }

    RoadNetwork finish() { return RoadNetwork(std::move(segments_), boundary_, stats_); }

private:
    const Boundary& boundary_;
    const ParseOptions& options_;
    geo::LocalFrame frame_;
    ParseStats stats_;
    std::set<SegmentId> seen_;
    std::vector<RoadSegment> segments_;
};

} // namespace

Boundary parse_bbox(std::string_view text) {
    const auto parts = text::split_csv_line(text);
    if (parts.size() != 4) throw ParseError("bbox must be 'minLon,minLat,maxLon,maxLat'");
    double v[4];
    for (int i = 0; i < 4; ++i)
        if (!text::parse_double(parts[i], v[i]))
            throw ParseError("bbox component '" + parts[i] + "' is not a number");
    try {
        return Boundary{geo::checked_bbox(v[0], v[1], v[2], v[3]), {}};
    } catch (const ContractViolation& e) {
        throw ParseError(e.what());
    }
}

Boundary parse_boundary_geojson(std::string_view doc) {
    json j = parse_json(doc);
    if (j.value("type", "") == "FeatureCollection") {
        if (!j.contains("features") || !j["features"].is_array() || j["features"].empty())
            throw ParseError("boundary FeatureCollection has no features");
        j = j["features"][0];
    }
    if (j.value("type", "") == "Feature") j = j["geometry"];
    if (!j.is_object()) throw ParseError("boundary has no geometry");
    const auto type = j.value("type", "");
    std::vector<std::vector<geo::GeoPoint>> rings;
    if (type == "Polygon") {
        rings.push_back(coordinate_list(j["coordinates"].at(0), "coordinates[0]"));
    } else if (type == "MultiPolygon") {
        for (std::size_t i = 0; i < j["coordinates"].size(); ++i)
            rings.push_back(coordinate_list(j["coordinates"][i].at(0),
                                            "coordinates[" + std::to_string(i) + "][0]"));
    } else {
        throw ParseError("boundary geometry must be Polygon or MultiPolygon, got '" + type + "'");
    }
    std::vector<geo::GeoPoint> all;
    for (const auto& r : rings) all.insert(all.end(), r.begin(), r.end());
    if (all.size() < 3) throw ParseError("boundary polygon has too few vertices");
    return Boundary{bbox_of(all), rings.front()};
}

Boundary load_boundary(const std::string& spec) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(spec, ec)) return parse_bbox(spec);
    const auto contents = text::read_file(spec);
    const auto body = text::trim(contents);
    // A file may also hold a single bbox line.
    if (!body.empty() && body.front() != '{') return parse_bbox(body);
    return parse_boundary_geojson(contents);
}

std::string format_bbox(const geo::BBox& b) {
    return text::format_double(b.min_lon) + "," + text::format_double(b.min_lat) + "," +
           text::format_double(b.max_lon) + "," + text::format_double(b.max_lat);
}

RoadTypeMapping::RoadTypeMapping() {
    for (const char* hw : {"motorway", "trunk", "primary", "secondary", "tertiary", "residential",
                           "unclassified", "service", "living_street"})
        table_.emplace(hw, RoadType::roadway);
    table_.emplace("cycleway", RoadType::cycleway);
    table_.emplace("footway", RoadType::sidewalk);
    table_.emplace("pedestrian", RoadType::sidewalk);
    table_.emplace("path", RoadType::path);
    table_.emplace("track", RoadType::path);
    table_.emplace("bridleway", RoadType::path);
}

std::optional<RoadType> RoadTypeMapping::map(std::string_view highway) const {
    const auto it = table_.find(highway);
    return it == table_.end() ? std::nullopt : it->second;
}

void RoadTypeMapping::set(std::string highway, std::optional<RoadType> road_type) {
    table_.insert_or_assign(std::move(highway), road_type);
}

std::optional<RoadType> map_highway_to_road_type(std::string_view highway, const Tags&,
                                                 const RoadTypeMapping& mapping) {
    return mapping.map(highway);
}

bool has_bike_lane(const Tags& tags) {
    for (const char* key : {"cycleway", "cycleway:both", "cycleway:left", "cycleway:right"})
        if (auto it = tags.find(key); it != tags.end() && it->second == "lane") return true;
    return false;
}

RoadNetwork::RoadNetwork(std::vector<RoadSegment> segments, Boundary boundary, ParseStats stats)
    : segments_(std::move(segments)),
      boundary_(std::move(boundary)),
      frame_(boundary_.frame()),
      stats_(stats) {
    std::sort(segments_.begin(), segments_.end(),
              [](const RoadSegment& a, const RoadSegment& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < segments_.size(); ++i)
        if (segments_[i - 1].id == segments_[i].id)
            throw ContractViolation("duplicate segment id " + segments_[i].id.str());
    // Lengths are always measured in this network's frame.
    for (auto& s : segments_) s.length_m = s.geometry.length(frame_);
}

const RoadSegment* RoadNetwork::find(const SegmentId& id) const {
    const auto it = std::lower_bound(
        segments_.begin(), segments_.end(), id,
        [](const RoadSegment& s, const SegmentId& key) { return s.id < key; });
    return it != segments_.end() && it->id == id ? &*it : nullptr;
}

geo::GridIndex RoadNetwork::build_index(double radius_m) const {
    return build_index(radius_m, std::max(2.0 * radius_m, 1.0));
}

geo::GridIndex RoadNetwork::build_index(double radius_m, double cell_size_m) const {
    std::vector<geo::GridIndex::Entry> entries;
    entries.reserve(segments_.size());
    for (const auto& s : segments_) entries.push_back({s.id, &s.geometry});
    return geo::GridIndex(entries, cell_size_m, radius_m, frame_);
}

RoadNetwork parse_network_geojson(std::string_view doc, const Boundary& boundary,
                                  const ParseOptions& options) {
    const json j = parse_json(doc);
    if (!j.is_object() || j.value("type", "") != "FeatureCollection")
        throw ParseError("document is not a GeoJSON FeatureCollection");
    if (!j.contains("features") || !j["features"].is_array())
        throw ParseError("FeatureCollection lacks a 'features' array");

    Builder builder(boundary, options);
    const auto& features = j["features"];
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto where = "features[" + std::to_string(i) + "]";
        const auto& f = features[i];
        ++builder.stats().features;
        if (!f.is_object()) throw ParseError("feature is not an object", where);
        const json& geom = f.contains("geometry") ? f["geometry"] : json();
        const auto type = geom.is_object() ? geom.value("type", "") : std::string();
        if (type != "LineString" && type != "MultiLineString") {
            ++builder.stats().skipped_non_line;
            continue;
        }
        const json& props = f.contains("properties") ? f["properties"] : json();
        auto id = feature_id(f, props);
        if (!id) throw ParseError("feature has no OSM way id", where);
        Tags tags = tags_from_properties(props);
        if (type == "LineString") {
            builder.add(*id, coordinate_list(geom["coordinates"], where + ".geometry.coordinates"),
                        std::move(tags));
        } else {
            const auto& parts = geom["coordinates"];
            if (!parts.is_array())
                throw ParseError("coordinates must be an array", where + ".geometry.coordinates");
            for (std::size_t k = 0; k < parts.size(); ++k) {
                SegmentId part_id{id->way_id, static_cast<std::uint32_t>(k)};
                builder.add(part_id,
                            coordinate_list(parts[k], where + ".geometry.coordinates[" +
                                                          std::to_string(k) + "]"),
                            tags);
            }
        }
    }
    return builder.finish();
}

RoadNetwork parse_overpass_json(std::string_view doc, const Boundary& boundary,
                                const ParseOptions& options) {
    const json j = parse_json(doc);
    if (!j.is_object() || !j.contains("elements") || !j["elements"].is_array())
        throw ParseError("document is not an Overpass response (no 'elements' array)");

    Builder builder(boundary, options);
    const auto& elements = j["elements"];
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const auto where = "elements[" + std::to_string(i) + "]";
        const auto& e = elements[i];
        if (!e.is_object()) throw ParseError("element is not an object", where);
        const auto type = e.value("type", "");
        if (type == "node") continue;
        ++builder.stats().features;
        if (type != "way") {
            ++builder.stats().skipped_non_line;
            continue;
        }
        if (!e.contains("id") || !e["id"].is_number_integer())
            throw ParseError("way without integer id", where);
        const SegmentId id{e["id"].get<std::int64_t>(), std::nullopt};
        if (!e.contains("geometry") || !e["geometry"].is_array()) {
            ++builder.stats().skipped_bad_geometry;
            continue;
        }
        std::vector<geo::GeoPoint> pts;
        const auto& g = e["geometry"];
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g[k].is_null()) continue;
            const auto at = where + ".geometry[" + std::to_string(k) + "]";
            if (!g[k].is_object() || !g[k].contains("lat") || !g[k].contains("lon") ||
                !g[k]["lat"].is_number() || !g[k]["lon"].is_number())
                throw ParseError("geometry point must be {lat, lon}", at);
            const geo::GeoPoint p{g[k]["lon"].get<double>(), g[k]["lat"].get<double>()};
            if (!geo::is_valid(p)) throw ParseError("coordinate out of range", at);
            pts.push_back(p);
        }
        Tags tags;
        if (e.contains("tags") && e["tags"].is_object())
            for (const auto& [k, v] : e["tags"].items())
                if (!v.is_null() && !v.is_object() && !v.is_array()) tags.emplace(k, scalar_to_tag(v));
        builder.add(id, std::move(pts), std::move(tags));
    }
    return builder.finish();
}

RoadNetwork load_network(const std::filesystem::path& path, const Boundary& boundary,
                         const ParseOptions& options) {
    const auto doc = text::read_file(path);
    try {
        // cheap sniff; the real parser validates
        const auto head = std::string_view(doc).substr(0, 4096);
        if (head.find("\"elements\"") != std::string_view::npos &&
            head.find("\"FeatureCollection\"") == std::string_view::npos)
            return parse_overpass_json(doc, boundary, options);
        return parse_network_geojson(doc, boundary, options);
    } catch (const ParseError& e) {
        throw ParseError(e.what(), path.filename().string());
    }
}

std::string to_geojson(const RoadNetwork& network) {
    json features = json::array();
    for (const auto& s : network.segments()) {
        json coords = json::array();
        for (const auto& p : s.geometry.vertices()) coords.push_back({p.lon, p.lat});
        json props(s.tags);
        props["osm_way_id"] = s.id.way_id;
        props["segment_id"] = s.id.str();
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
                            {"properties", std::move(props)}});
    }
    return json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump();
}

} // namespace surfaceai::network
