#include <doctest.h>

#include "support.hpp"
#include "surfaceai/errors.hpp"
#include "surfaceai/road_network.hpp"
#include "surfaceai/text.hpp"

using namespace surfaceai;
using namespace surfaceai::network;

namespace {

const Boundary kBox = parse_bbox("13.40,52.50,13.41,52.51");

std::string line_feature(const std::string& props, const std::string& coords) {
    return R"({"type":"Feature","geometry":{"type":"LineString","coordinates":)" + coords +
           R"(},"properties":)" + props + "}";
}

std::string collection(const std::vector<std::string>& features) {
    std::string s = R"({"type":"FeatureCollection","features":[)";
    for (std::size_t i = 0; i < features.size(); ++i) s += (i ? "," : "") + features[i];
    return s + "]}";
}

} // namespace

TEST_CASE("highway mapping table") {
    const std::vector<std::pair<std::string, std::optional<RoadType>>> expected = {
        {"motorway", RoadType::roadway},     {"trunk", RoadType::roadway},
        {"primary", RoadType::roadway},      {"secondary", RoadType::roadway},
        {"tertiary", RoadType::roadway},     {"residential", RoadType::roadway},
        {"unclassified", RoadType::roadway}, {"service", RoadType::roadway},
        {"living_street", RoadType::roadway}, {"cycleway", RoadType::cycleway},
        {"footway", RoadType::sidewalk},     {"pedestrian", RoadType::sidewalk},
        {"path", RoadType::path},            {"track", RoadType::path},
        {"bridleway", RoadType::path},       {"proposed", std::nullopt},
        {"", std::nullopt}};
    for (const auto& [hw, rt] : expected) {
        CAPTURE(hw);
        CHECK(map_highway_to_road_type(hw, {}) == rt);
    }
    RoadTypeMapping custom;
    custom.set("proposed", RoadType::path);
    custom.set("service", std::nullopt);
    CHECK(map_highway_to_road_type("proposed", {}, custom) == RoadType::path);
    CHECK(map_highway_to_road_type("service", {}, custom) == std::nullopt);
}

TEST_CASE("bike lane tagging") {
    CHECK(has_bike_lane({{"cycleway", "lane"}}));
    CHECK(has_bike_lane({{"cycleway:right", "lane"}}));
    CHECK(has_bike_lane({{"cycleway:both", "lane"}}));
    CHECK_FALSE(has_bike_lane({{"cycleway", "track"}}));
    CHECK_FALSE(has_bike_lane({}));
}

TEST_CASE("bbox parsing") {
    CHECK(kBox.bbox == geo::BBox{13.40, 52.50, 13.41, 52.51});
    CHECK_THROWS_AS(parse_bbox("13.41,52.50,13.40,52.51"), ParseError);
    CHECK_THROWS(parse_bbox("1,2,3"));
    CHECK_THROWS(parse_bbox("a,b,c,d"));
    CHECK(parse_bbox(format_bbox(kBox.bbox)).bbox == kBox.bbox);
}

TEST_CASE("boundary polygon file or bbox text file") {
    testsupport::TempDir dir;
    text::write_file_atomic(dir / "poly.geojson",
                            R"({"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":)"
                            R"([[[13.40,52.50],[13.41,52.50],[13.41,52.51],[13.40,52.51],[13.40,52.50]]]}})");
    const auto b = load_boundary((dir / "poly.geojson").string());
    CHECK(b.bbox == kBox.bbox);
    CHECK(b.ring.size() == 5);
    text::write_file_atomic(dir / "box.txt", "13.40,52.50,13.41,52.51\n");
    CHECK(load_boundary((dir / "box.txt").string()).bbox == kBox.bbox);
    CHECK(load_boundary("13.40,52.50,13.41,52.51").bbox == kBox.bbox);
}

TEST_CASE("single residential LineString") {
    const auto net = parse_network_geojson(
        collection({line_feature(R"({"osm_way_id": 7, "highway": "residential", "name": "A"})",
                                 "[[13.401,52.505],[13.402,52.505],[13.403,52.5055]]")}),
        kBox);
    REQUIRE(net.segments().size() == 1);
    const auto& s = net.segments()[0];
    CHECK(s.id == SegmentId{7, std::nullopt});
    CHECK(s.mapped_road_type == RoadType::roadway);
    CHECK(s.name == std::optional<std::string>("A"));
    CHECK(s.geometry.size() == 3);
    CHECK(s.length_m == doctest::Approx(s.geometry.length(net.frame())).epsilon(1e-12));
}

TEST_CASE("feature without highway is dropped") {
    const auto net = parse_network_geojson(
        collection({line_feature(R"({"osm_way_id": 7, "building": "yes"})", "[[13.401,52.505],[13.402,52.505]]")}),
        kBox);
    CHECK(net.segments().empty());
    CHECK(net.stats().dropped_no_highway == 1);
}

TEST_CASE("segments outside the bbox are dropped, crossing ones kept whole") {
    const auto net = parse_network_geojson(
        collection({line_feature(R"({"osm_way_id": 1, "highway": "path"})", "[[13.50,52.505],[13.51,52.505]]"),
                    line_feature(R"({"osm_way_id": 2, "highway": "path"})", "[[13.39,52.505],[13.42,52.505]]")}),
        kBox);
    REQUIRE(net.segments().size() == 1);
    CHECK(net.segments()[0].id.way_id == 2);
    CHECK(net.segments()[0].geometry.front().lon == 13.39);
    CHECK(net.stats().dropped_outside == 1);
}

TEST_CASE("five-feature fixture") {
    const auto net = load_network(testsupport::fixture("network_mixed.geojson"), kBox);
    struct Want {
        SegmentId id;
        std::string highway;
        std::optional<RoadType> rt;
        bool bike_lane;
    };
    const std::vector<Want> want = {
        {{101, std::nullopt}, "residential", RoadType::roadway, true},
        {{102, std::nullopt}, "cycleway", RoadType::cycleway, false},
        {{104, 0u}, "track", RoadType::path, false},
        {{104, 1u}, "track", RoadType::path, false},
    };
    REQUIRE(net.segments().size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        const auto& s = net.segments()[i];
        CAPTURE(s.id.str());
        CHECK(s.id == want[i].id);
        CHECK(s.highway == want[i].highway);
        CHECK(s.mapped_road_type == want[i].rt);
        CHECK(s.accepts_bike_lane == want[i].bike_lane);
    }
    CHECK(net.segments()[0].name == std::optional<std::string>("Lindenweg"));
    CHECK(net.segments()[2].id.str() == "104#0");
    CHECK(net.segments()[2].tags.at("tracktype") == "grade2");
    CHECK(net.stats().features == 5);
    CHECK(net.stats().skipped_non_line == 1);
    CHECK(net.stats().dropped_no_highway == 1);
}

TEST_CASE("overpass junction fixture") {
    const auto net = load_network(testsupport::fixture("overpass_junction.json"), kBox);
    REQUIRE(net.segments().size() == 4);
    const std::vector<std::pair<std::int64_t, std::string>> want = {
        {201, "primary"}, {202, "residential"}, {203, "footway"}, {204, "cycleway"}};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(net.segments()[i].id == SegmentId{want[i].first, std::nullopt});
        CHECK(net.segments()[i].highway == want[i].second);
        // all four arms start at the shared junction node
        CHECK(net.segments()[i].geometry.front() == geo::GeoPoint{13.405, 52.505});
    }
    CHECK(net.segments()[0].name == std::optional<std::string>("Nordallee"));
    CHECK(net.segments()[2].mapped_road_type == RoadType::sidewalk);
}

TEST_CASE("overpass edge cases") {
    CHECK(parse_overpass_json(R"({"elements": []})", kBox).segments().empty());
    const auto net = parse_overpass_json(
        R"({"elements": [{"type": "way", "id": 5, "tags": {"highway": "path"}},
                         {"type": "way", "id": 6, "tags": {"highway": "path"},
                          "geometry": [{"lat": 52.505, "lon": 13.401}, {"lat": 52.506, "lon": 13.402}]}]})",
        kBox);
    CHECK(net.segments().size() == 1);
    CHECK(net.stats().skipped_bad_geometry == 1);
}

TEST_CASE("malformed documents report a location") {
    CHECK_THROWS_AS(parse_network_geojson("{not json", kBox), ParseError);
    CHECK_THROWS_AS(parse_network_geojson(R"({"type":"FeatureCollection"})", kBox), ParseError);
    try {
        parse_network_geojson(collection({line_feature(R"({"highway": "path"})", "[[13.401,52.505],[13.402,52.505]]")}),
                              kBox);
        FAIL("missing id must be rejected");
    } catch (const ParseError& e) {
        CHECK(e.where() == "features[0]");
    }
}

TEST_CASE("degenerate geometry is skipped") {
    const auto net = parse_network_geojson(
        collection({line_feature(R"({"osm_way_id": 1, "highway": "path"})", "[[13.401,52.505],[13.401,52.505]]")}),
        kBox);
    CHECK(net.segments().empty());
    CHECK(net.stats().skipped_bad_geometry == 1);
}

TEST_CASE("parsing is deterministic and export round-trips") {
    const auto doc = text::read_file(testsupport::fixture("network_mixed.geojson"));
    const auto a = parse_network_geojson(doc, kBox);
    const auto b = parse_network_geojson(doc, kBox);
    CHECK(to_geojson(a) == to_geojson(b));

    const auto again = parse_network_geojson(to_geojson(a), kBox);
    REQUIRE(again.segments().size() == a.segments().size());
    for (std::size_t i = 0; i < a.segments().size(); ++i) {
        const auto& x = a.segments()[i];
        const auto& y = again.segments()[i];
        CHECK(x.id == y.id);
        CHECK(x.geometry == y.geometry);
        CHECK(x.tags == y.tags);
        CHECK(x.mapped_road_type == y.mapped_road_type);
    }
}

TEST_CASE("network rejects duplicate ids and finds by id") {
    const auto b = testsupport::boundary_around(testsupport::kOrigin);
    const auto f = b.frame();
    std::vector<RoadSegment> segs{
        testsupport::make_segment(3, {f.to_geo({0, 0}), f.to_geo({10, 0})}, f),
        testsupport::make_segment(1, {f.to_geo({0, 5}), f.to_geo({10, 5})}, f)};
    const RoadNetwork net(segs, b);
    CHECK(net.segments()[0].id.way_id == 1);
    CHECK(net.find(SegmentId{3, std::nullopt}) != nullptr);
    CHECK(net.find(SegmentId{2, std::nullopt}) == nullptr);
    segs.push_back(segs[0]);
    CHECK_THROWS_AS(RoadNetwork(segs, b), ContractViolation);
}

TEST_CASE("segment id text form") {
    CHECK(SegmentId::parse("123").str() == "123");
    CHECK(SegmentId::parse("123#2") == SegmentId{123, 2u});
    CHECK(SegmentId{5, std::nullopt} < SegmentId{5, 0u});
    CHECK(SegmentId{5, 9u} < SegmentId{6, std::nullopt});
    CHECK_THROWS(SegmentId::parse("x"));
    CHECK_THROWS(SegmentId::parse("1#"));
}
