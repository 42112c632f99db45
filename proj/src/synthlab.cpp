#include "surfaceai/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "surfaceai/errors.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::synthlab {

namespace {

constexpr double kParallelOffsetM = 4.0;
constexpr double kCurveAmplitudeM = 1.5;

struct PlannedSegment {
    SegmentId id;
    std::vector<geo::Xy> local;
    std::string highway;
};

SurfaceType other_surface(SurfaceType t, Rng& rng) {
    std::vector<SurfaceType> others;
    for (auto s : kSurfaceTypes)
        if (s != t) others.push_back(s);
    return others[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(others.size()) - 1))];
}

RoadType other_road_type(RoadType t, Rng& rng) {
    std::vector<RoadType> others;
    for (auto r : kRoadTypes)
        if (r != t && r != RoadType::no_focus) others.push_back(r);
    return others[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(others.size()) - 1))];
}

std::vector<geo::Xy> street(double x0, double y, double length, bool curved, double phase) {
    if (!curved) return {{x0, y}, {x0 + length, y}};
    std::vector<geo::Xy> pts;
    const int n = std::max(2, static_cast<int>(std::ceil(length / 10.0)) + 1);
    for (int i = 0; i < n; ++i) {
        const double x = length * i / (n - 1);
        pts.push_back({x0 + x, y + kCurveAmplitudeM * std::sin(2 * std::numbers::pi * x / 80.0 + phase)});
    }
    return pts;
}

geo::Xy point_at(const std::vector<geo::Xy>& pts, const std::vector<double>& cum, double c) {
    std::size_t i = 1;
    while (i + 1 < pts.size() && cum[i] < c) ++i;
    const double len = cum[i] - cum[i - 1];
    const double t = len > 0 ? std::clamp((c - cum[i - 1]) / len, 0.0, 1.0) : 0.0;
    return {pts[i - 1].x + t * (pts[i].x - pts[i - 1].x), pts[i - 1].y + t * (pts[i].y - pts[i - 1].y)};
}

} // namespace

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
    const int span = hi - lo + 1;
    return std::min(hi, lo + static_cast<int>(std::floor(uniform() * span)));
}

double Rng::normal(double mean, double sd) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void validate(const ScenarioSpec& s) {
    auto rate = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate(s.type_noise_rate) || !rate(s.drop_rate) || !rate(s.road_type_noise_rate) ||
        !rate(s.no_focus_rate))
        throw ContractViolation("scenario rates must lie in [0, 1]");
    if (!(s.quality_noise_sd >= 0.0) || !(s.geotag_noise_sd_m >= 0.0))
        throw ContractViolation("noise standard deviations must be non-negative");
    if (!(s.segment_length_min_m > 0.0) || s.segment_length_min_m > s.segment_length_max_m)
        throw ContractViolation("segment length range is empty");
    if (s.images_per_subsegment_min < 0 || s.images_per_subsegment_min > s.images_per_subsegment_max)
        throw ContractViolation("images per subsegment range is empty");
    if (s.spacing_m < 25.0 + (s.parallel_roads ? kParallelOffsetM : 0.0))
        throw ContractViolation("street spacing below 25 m");
    if (!(s.subsegment_m > 0.0)) throw ContractViolation("subsegment length must be positive");
}

Scenario generate_scenario(const ScenarioSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);

    // Plan the layout in meters around (0, 0) first so the boundary, and with
    // it the network frame, is known before any coordinate is emitted.
    std::vector<PlannedSegment> planned;
    double half_w = 0.0, half_h = 0.0;
    const std::size_t n = spec.n_segments;
    if (spec.layout == Layout::rows) {
        const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)))));
        const std::size_t rows = (n + cols - 1) / cols;
        const double cell_w = spec.segment_length_max_m + 40.0;
        half_w = cols * cell_w / 2.0;
        half_h = rows * spec.spacing_m / 2.0;
        static const char* kHighways[] = {"residential", "tertiary", "cycleway", "footway", "path", "track"};
        for (std::size_t i = 0; i < n; ++i) {
            const double x0 = -half_w + static_cast<double>(i % cols) * cell_w;
            const double y = -half_h + (static_cast<double>(i / cols) + 0.5) * spec.spacing_m;
            const double len = rng.uniform(spec.segment_length_min_m, spec.segment_length_max_m);
            const bool curved = spec.curved && rng.bernoulli(0.5);
            const double phase = rng.uniform(0.0, 2 * std::numbers::pi);
            const std::string highway =
                spec.parallel_roads ? "residential" : kHighways[rng.uniform_int(0, 5)];
            const auto line = street(x0, y, len, curved, phase);
            planned.push_back({SegmentId{1000 + static_cast<std::int64_t>(i), std::nullopt}, line, highway});
            if (spec.parallel_roads) {
                auto partner = line;
                for (auto& p : partner) p.y += kParallelOffsetM;
                planned.push_back({SegmentId{500000 + static_cast<std::int64_t>(i), std::nullopt},
                                   std::move(partner), "cycleway"});
            }
        }
    } else {
        const double block = std::max(spec.spacing_m, spec.segment_length_max_m);
        const auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)) / 2.0)));
        half_w = half_h = m * block / 2.0;
        std::vector<std::pair<geo::Xy, geo::Xy>> edges;
        for (std::size_t j = 0; j <= m; ++j)
            for (std::size_t i = 0; i < m; ++i)
                edges.push_back({{i * block - half_w, j * block - half_h}, {(i + 1) * block - half_w, j * block - half_h}});
        for (std::size_t i = 0; i <= m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                edges.push_back({{i * block - half_w, j * block - half_h}, {i * block - half_w, (j + 1) * block - half_h}});
        edges.resize(std::min(edges.size(), n));
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const auto [a, b] = edges[i];
            const std::string highway = rng.bernoulli(0.5) ? "residential" : "tertiary";
            planned.push_back({SegmentId{1000 + static_cast<std::int64_t>(i), std::nullopt}, {a, b}, highway});
            if (spec.parallel_roads) {
                // offset to the left of travel, trimmed clear of the cross streets
                const double dx = b.x - a.x, dy = b.y - a.y, len = std::hypot(dx, dy);
                const double ox = -dy / len * kParallelOffsetM, oy = dx / len * kParallelOffsetM;
                const double tx = dx / len * 6.0, ty = dy / len * 6.0;
                planned.push_back({SegmentId{500000 + static_cast<std::int64_t>(i), std::nullopt},
                                   {{a.x + ox + tx, a.y + oy + ty}, {b.x + ox - tx, b.y + oy - ty}},
                                   "cycleway"});
            }
        }
    }

    constexpr double kPad = 100.0;
    const geo::LocalFrame plan_frame(spec.origin);
    const auto sw = plan_frame.to_geo({-half_w - kPad, -half_h - kPad});
    const auto ne = plan_frame.to_geo({half_w + kPad, half_h + kPad});
    network::Boundary boundary{geo::checked_bbox(sw.lon, sw.lat, ne.lon, ne.lat), {}};
    const geo::LocalFrame frame = boundary.frame();

    const network::RoadTypeMapping mapping;
    std::vector<network::RoadSegment> segments;
    for (const auto& p : planned) {
        std::vector<geo::GeoPoint> pts;
        for (const auto& q : p.local) pts.push_back(frame.to_geo(q));
        network::RoadSegment seg{p.id, geo::Polyline(std::move(pts)), p.highway, std::nullopt,
                                 mapping.map(p.highway), false, 0.0,
                                 {{"highway", p.highway}, {"name", "Synth " + p.id.str()}}};
        seg.name = "Synth " + p.id.str();
        seg.length_m = seg.geometry.length(frame);
        segments.push_back(std::move(seg));
    }
    network::RoadNetwork net(std::move(segments), boundary);

    Scenario sc{std::move(net), {}, {}, {}, {}};
    std::int64_t counter = 0;
    for (const auto& seg : sc.network.segments()) {
        SegmentTruth truth;
        truth.segment_id = seg.id;
        truth.surface_type = kSurfaceTypes[static_cast<std::size_t>(rng.uniform_int(0, 4))];
        const double base = rng.uniform(1.2, 4.8);

        std::vector<geo::Xy> local;
        for (const auto& v : seg.geometry.vertices()) local.push_back(frame.to_local(v));
        std::vector<double> cum(local.size(), 0.0);
        for (std::size_t i = 1; i < local.size(); ++i)
            cum[i] = cum[i - 1] + std::hypot(local[i].x - local[i - 1].x, local[i].y - local[i - 1].y);

        const auto pieces = geo::split_polyline(seg.geometry, spec.subsegment_m, frame);
        for (const auto& piece : pieces) {
            const double q_sub = std::clamp(base + rng.uniform(-0.3, 0.3), 1.0, 5.0);
            truth.subsegment_quality.push_back(q_sub);
            const bool dropped = rng.bernoulli(spec.drop_rate);
            truth.subsegment_dropped.push_back(dropped);
            if (dropped) continue;
            const int count = rng.uniform_int(spec.images_per_subsegment_min, spec.images_per_subsegment_max);
            const double span = piece.end_chainage_m - piece.start_chainage_m;
            for (int k = 0; k < count; ++k) {
                const double c = piece.start_chainage_m + span * rng.uniform(0.05, 0.95);
                auto xy = point_at(local, cum, c);
                if (spec.geotag_noise_sd_m > 0.0) {
                    xy.x += rng.normal(0.0, spec.geotag_noise_sd_m);
                    xy.y += rng.normal(0.0, spec.geotag_noise_sd_m);
                }
                const auto id = std::to_string(1'000'000 + counter);
                imagery::ImageRecord rec;
                rec.image_id = id;
                rec.position = frame.to_geo(xy);
                rec.captured_at = 1'700'000'000'000 + counter * 1000;
                rec.creator = "synthlab";
                rec.sequence_id = "seq-" + seg.id.str();
                rec.camera_heading = 90.0;
                ++counter;

                Prediction pred;
                pred.image_id = id;
                pred.road_type = seg.mapped_road_type.value_or(RoadType::roadway);
                if (rng.bernoulli(spec.road_type_noise_rate)) pred.road_type = other_road_type(pred.road_type, rng);
                if (rng.bernoulli(spec.no_focus_rate)) pred.road_type = RoadType::no_focus;
                pred.road_type_conf = rng.uniform(0.6, 1.0);
                pred.surface_type = truth.surface_type;
                if (rng.bernoulli(spec.type_noise_rate)) pred.surface_type = other_surface(truth.surface_type, rng);
                pred.surface_type_conf = rng.uniform(0.5, 1.0);
                double q = q_sub;
                if (spec.quality_noise_sd > 0.0) q = std::clamp(q + rng.normal(0.0, spec.quality_noise_sd), 1.0, 5.0);
                pred.quality = QualityScore(q);

                sc.image_truth.push_back({id, seg.id, c, piece.index});
                sc.images.push_back(std::move(rec));
                sc.predictions.emplace(id, std::move(pred));
            }
        }
        const auto& sq = truth.subsegment_quality;
        truth.quality = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(sq.size());
        sc.truth.push_back(std::move(truth));
    }
    auto by_id = [](const auto& a, const auto& b) { return a.image_id < b.image_id; };
    std::sort(sc.images.begin(), sc.images.end(), by_id);
    std::sort(sc.image_truth.begin(), sc.image_truth.end(), by_id);
    return sc;
}

std::vector<metrics::LabeledSample> truth_samples(const Scenario& scenario) {
    std::vector<metrics::LabeledSample> out;
    for (const auto& t : scenario.truth)
        out.push_back({t.segment_id, t.surface_type, quality_to_class(QualityScore(t.quality))});
    return out;
}

ScenarioFiles write_scenario(const Scenario& sc, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    ScenarioFiles f{dir / "network.geojson", dir / "boundary.txt", dir / "images.ndjson",
                    dir / "predictions.csv", dir / "truth.csv",    dir / "image_truth.csv"};
    text::write_file_atomic(f.network, network::to_geojson(sc.network));
    text::write_file_atomic(f.boundary, network::format_bbox(sc.network.boundary().bbox) + "\n");
    text::write_file_atomic(f.images, imagery::to_ndjson(sc.images));
    text::write_file_atomic(f.predictions, classifier::to_predictions_csv(sc.predictions));
    text::write_file_atomic(f.truth, metrics::to_truth_csv(truth_samples(sc)));
    std::string it = "image_id,segment_id,chainage_m,sub_index\n";
    for (const auto& t : sc.image_truth)
        it += t.image_id + "," + t.segment_id.str() + "," + text::format_double(t.chainage_m) + "," +
              std::to_string(t.sub_index) + "\n";
    text::write_file_atomic(f.image_truth, it);
    return f;
}

} // namespace surfaceai::synthlab
