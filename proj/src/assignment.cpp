#include "surfaceai/assignment.hpp"

#include <algorithm>
#include <optional>
#include <thread>
#include <variant>

#include "surfaceai/errors.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::assignment {

namespace {

struct Candidate {
    const network::RoadSegment* segment;
    geo::Projection projection;
};

bool closer(const Candidate& a, const Candidate& b) {
    if (a.projection.distance_m != b.projection.distance_m)
        return a.projection.distance_m < b.projection.distance_m;
    return a.segment->id < b.segment->id;
}

using Outcome = std::variant<ImagePlacement, Discard>;

Outcome assign_one(const ImageInput& in, const network::RoadNetwork& network,
                   const geo::GridIndex& index, double radius_m) {
    const auto& image = *in.image;
    const auto& pred = *in.prediction;
    if (pred.road_type == RoadType::no_focus) return Discard{image.image_id, DiscardReason::no_focus};

    std::vector<Candidate> candidates;
    for (const auto& id : index.query(image.position, radius_m)) {
        const auto* seg = network.find(id);
        if (!seg) continue;
        const auto proj = geo::project_point_to_polyline(image.position, seg->geometry, network.frame());
        if (proj.distance_m <= radius_m) candidates.push_back({seg, proj});
    }
    if (candidates.empty()) return Discard{image.image_id, DiscardReason::out_of_range};

    auto place = [&](const Candidate& c, Disambiguation how) {
        return ImagePlacement{image.image_id, c.segment->id,
                              std::clamp(c.projection.chainage_m, 0.0, c.segment->length_m),
                              c.projection.distance_m, how};
    };
    if (candidates.size() == 1) return place(candidates.front(), Disambiguation::single_candidate);

    const Candidate* best_match = nullptr;
    const Candidate* best_any = nullptr;
    for (const auto& c : candidates) {
        if (!best_any || closer(c, *best_any)) best_any = &c;
        if (road_type_matches(*c.segment, pred.road_type) && (!best_match || closer(c, *best_match)))
            best_match = &c;
    }
    if (best_match) return place(*best_match, Disambiguation::road_type_match);
    return place(*best_any, Disambiguation::nearest_fallback);
}

} // namespace

std::string_view to_string(Disambiguation d) noexcept {
    switch (d) {
    case Disambiguation::single_candidate: return "single_candidate";
    case Disambiguation::road_type_match: return "road_type_match";
    case Disambiguation::nearest_fallback: return "nearest_fallback";
    }
    return "?";
}

std::string_view to_string(DiscardReason r) noexcept {
    switch (r) {
    case DiscardReason::no_focus: return "no_focus";
    case DiscardReason::out_of_range: return "out_of_range";
    }
    return "?";
}

bool road_type_matches(const network::RoadSegment& segment, RoadType predicted) noexcept {
    if (!segment.mapped_road_type) return false;
    if (*segment.mapped_road_type == predicted) return true;
    return predicted == RoadType::bike_lane && *segment.mapped_road_type == RoadType::roadway &&
           segment.accepts_bike_lane;
}

AssignmentResult assign_images(const std::vector<ImageInput>& images,
                               const network::RoadNetwork& network, const geo::GridIndex& index,
                               double radius_m, unsigned threads) {
    if (!(radius_m >= 0.0)) throw ContractViolation("assignment radius must be non-negative");
    if (radius_m > index.build_radius())
        throw ContractViolation("assignment radius exceeds the index build radius");
    for (const auto& in : images)
        if (!in.image || !in.prediction) throw ContractViolation("image without prediction");

    std::vector<std::optional<Outcome>> outcomes(images.size());
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            outcomes[i] = assign_one(images[i], network, index, radius_m);
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(images.size() / 256 + 1)));
    if (threads == 1) {
        run(0, images.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (images.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(run, std::min(images.size(), t * chunk),
                              std::min(images.size(), (t + 1) * chunk));
    }

    AssignmentResult result;
    for (auto& o : outcomes) {
        if (auto* p = std::get_if<ImagePlacement>(&*o))
            result.placements.push_back(std::move(*p));
        else
            result.discards.push_back(std::get<Discard>(std::move(*o)));
    }
    std::sort(result.placements.begin(), result.placements.end(),
              [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    std::sort(result.discards.begin(), result.discards.end(),
              [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    return result;
}

std::string to_audit_csv(const std::vector<ImagePlacement>& placements) {
    std::string out = "image_id,segment_id,chainage_m,distance_m,disambiguation\n";
    for (const auto& p : placements) {
        out += text::csv_field(p.image_id);
        out += ',';
        out += p.segment_id.str();
        out += ',';
        out += text::format_double(p.chainage_m);
        out += ',';
        out += text::format_double(p.distance_m);
        out += ',';
        out += to_string(p.disambiguation);
        out += '\n';
    }
    return out;
}

} // namespace surfaceai::assignment
