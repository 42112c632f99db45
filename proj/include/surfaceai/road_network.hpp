#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "surfaceai/geo.hpp"
#include "surfaceai/segment_id.hpp"
#include "surfaceai/taxonomy.hpp"

namespace surfaceai::network {

using Tags = std::map<std::string, std::string>;

// Area of interest: a bounding box, optionally with the polygon it came from.
struct Boundary {
    geo::BBox bbox;
    std::vector<geo::GeoPoint> ring;  // empty for plain bbox boundaries

    geo::LocalFrame frame() const { return geo::LocalFrame(bbox.center()); }
};

// "minLon,minLat,maxLon,maxLat"
Boundary parse_bbox(std::string_view text);
// GeoJSON Polygon / MultiPolygon, as bare geometry, Feature or FeatureCollection.
Boundary parse_boundary_geojson(std::string_view doc);
// A bbox string, or a path to a file holding a bbox line or a GeoJSON polygon.
Boundary load_boundary(const std::string& spec);
std::string format_bbox(const geo::BBox& b);

// highway tag -> road-type class. Overridable per deployment.
class RoadTypeMapping {
public:
    RoadTypeMapping();  // default table

    std::optional<RoadType> map(std::string_view highway) const;
    void set(std::string highway, std::optional<RoadType> road_type);

private:
    std::map<std::string, std::optional<RoadType>, std::less<>> table_;
};

std::optional<RoadType> map_highway_to_road_type(std::string_view highway, const Tags& other_tags,
                                                 const RoadTypeMapping& mapping = {});

// True when the way carries an on-road cycle lane marking (cycleway=lane and
// its :left/:right/:both variants).
bool has_bike_lane(const Tags& tags);

struct RoadSegment {
    SegmentId id;
    geo::Polyline geometry;
    std::string highway;
    std::optional<std::string> name;
    std::optional<RoadType> mapped_road_type;
    bool accepts_bike_lane = false;
    double length_m = 0.0;
    Tags tags;  // every OSM tag, highway and name included
};

struct ParseStats {
    std::size_t features = 0;
    std::size_t skipped_non_line = 0;
    std::size_t skipped_bad_geometry = 0;
    std::size_t dropped_no_highway = 0;
    std::size_t dropped_outside = 0;
    std::size_t dropped_duplicate_id = 0;
};

class RoadNetwork {
public:
    RoadNetwork(std::vector<RoadSegment> segments, Boundary boundary, ParseStats stats = {});

    const std::vector<RoadSegment>& segments() const noexcept { return segments_; }
    const Boundary& boundary() const noexcept { return boundary_; }
    const geo::LocalFrame& frame() const noexcept { return frame_; }
    const ParseStats& stats() const noexcept { return stats_; }

    // nullptr when absent
    const RoadSegment* find(const SegmentId& id) const;

    geo::GridIndex build_index(double radius_m) const;
    geo::GridIndex build_index(double radius_m, double cell_size_m) const;

private:
    std::vector<RoadSegment> segments_;  // sorted by id
    Boundary boundary_;
    geo::LocalFrame frame_;
    ParseStats stats_;
};

struct ParseOptions {
    RoadTypeMapping mapping;
};

RoadNetwork parse_network_geojson(std::string_view doc, const Boundary& boundary,
                                  const ParseOptions& options = {});
RoadNetwork parse_overpass_json(std::string_view doc, const Boundary& boundary,
                                const ParseOptions& options = {});
// Dispatches on content: Overpass responses carry an "elements" array.
RoadNetwork load_network(const std::filesystem::path& path, const Boundary& boundary,
                         const ParseOptions& options = {});

// FeatureCollection with one LineString per segment; properties are the tags
// plus osm_way_id and segment_id. Parses back to the same network.
std::string to_geojson(const RoadNetwork& network);

} // namespace surfaceai::network
