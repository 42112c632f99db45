#include <nlohmann/json.hpp>

#include "surfaceai/pipeline.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::pipeline {

using aggregation::SegmentAggregate;
using nlohmann::json;

std::string export_geojson(const std::vector<SegmentAggregate>& aggregates,
                           const network::RoadNetwork& network) {
    json features = json::array();
    for (const auto& a : aggregates) {
        const auto* seg = network.find(a.segment_id);
        if (!seg) throw ContractViolation("aggregate for unknown segment " + a.segment_id.str());
        json coords = json::array();
        for (const auto& p : seg->geometry.vertices()) coords.push_back({p.lon, p.lat});

        json props = json::object();
        for (const auto& [k, v] : seg->tags) props[k] = v;
        props["osm_way_id"] = a.segment_id.way_id;
        props["segment_id"] = a.segment_id.str();
        const bool ok = a.status == aggregation::Status::ok;
        props["surface_type"] = ok && a.surface_type ? json(to_string(*a.surface_type)) : json();
        props["quality_mean"] = ok && a.quality_mean ? json(*a.quality_mean) : json();
        props["quality_class"] = ok && a.quality_class ? json(to_string(*a.quality_class)) : json();
        props["status"] = to_string(a.status);
        props["n_subsegments"] = a.n_subsegments;
        props["n_classified"] = a.n_classified;
        props["image_count"] = a.image_count;

        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "LineString"}, {"coordinates", std::move(coords)}}},
                            {"properties", std::move(props)}});
    }
    json fc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
    return fc.dump(1) + "\n";
}

std::string export_csv(const std::vector<SegmentAggregate>& aggregates) {
    std::string out = "segment_id,surface_type,quality_mean,quality_class,status\n";
    for (const auto& a : aggregates) {
        const bool ok = a.status == aggregation::Status::ok;
        out += a.segment_id.str();
        out += ',';
        if (ok && a.surface_type) out += to_string(*a.surface_type);
        out += ',';
        if (ok && a.quality_mean) out += text::format_double(*a.quality_mean);
        out += ',';
        if (ok && a.quality_class) out += to_string(*a.quality_class);
        out += ',';
        out += to_string(a.status);
        out += '\n';
    }
    return out;
}

std::vector<SegmentAggregate> parse_export_csv(std::string_view contents) {
    std::vector<SegmentAggregate> out;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    while (pos < contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        const auto line = text::trim(contents.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(line_no);
        if (!header) {
            if (line != "segment_id,surface_type,quality_mean,quality_class,status")
                throw ParseError("unexpected segment export header", where);
            header = true;
            continue;
        }
        const auto f = text::split_csv_line(line);
        if (f.size() != 5) throw ParseError("expected 5 fields", where);
        SegmentAggregate a;
        try {
            a.segment_id = SegmentId::parse(f[0]);
        } catch (const Error& e) {
            throw ParseError(e.what(), where);
        }
        const auto status = aggregation::parse_status(f[4]);
        if (!status) throw ParseError("unknown status '" + f[4] + "'", where);
        a.status = *status;
        if (!f[1].empty()) {
            a.surface_type = parse_surface_type(f[1]);
            if (!a.surface_type) throw ParseError("unknown surface type '" + f[1] + "'", where);
        }
        if (!f[2].empty()) {
            double q = 0;
            if (!text::parse_double(f[2], q)) throw ParseError("bad quality_mean '" + f[2] + "'", where);
            a.quality_mean = q;
        }
        if (!f[3].empty()) {
            a.quality_class = parse_quality_class(f[3]);
            if (!a.quality_class) throw ParseError("unknown quality class '" + f[3] + "'", where);
        }
        out.push_back(std::move(a));
    }
    if (!header) throw ParseError("empty segment export");
    return out;
}

} // namespace surfaceai::pipeline
