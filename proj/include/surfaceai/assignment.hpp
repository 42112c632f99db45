#pragma once

#include <string>
#include <utility>
#include <vector>

#include "surfaceai/classifier.hpp"
#include "surfaceai/imagery.hpp"
#include "surfaceai/road_network.hpp"

namespace surfaceai::assignment {

inline constexpr double kDefaultRadiusM = 10.0;

enum class Disambiguation { single_candidate, road_type_match, nearest_fallback };
enum class DiscardReason { no_focus, out_of_range };

std::string_view to_string(Disambiguation d) noexcept;
std::string_view to_string(DiscardReason r) noexcept;

struct ImagePlacement {
    std::string image_id;
    SegmentId segment_id;
    double chainage_m = 0.0;
    double distance_m = 0.0;
    Disambiguation disambiguation = Disambiguation::single_candidate;

    friend bool operator==(const ImagePlacement&, const ImagePlacement&) = default;
};

struct Discard {
    std::string image_id;
    DiscardReason reason;

    friend bool operator==(const Discard&, const Discard&) = default;
};

struct AssignmentResult {
    std::vector<ImagePlacement> placements;  // sorted by image_id
    std::vector<Discard> discards;           // sorted by image_id
};

struct ImageInput {
    const imagery::ImageRecord* image;
    const Prediction* prediction;
};

// Whether a segment's mapped road type agrees with an image's predicted one.
// bike_lane images also match roadway segments that carry a cycle lane.
bool road_type_matches(const network::RoadSegment& segment, RoadType predicted) noexcept;

// Places each image on at most one segment:
//   no_focus prediction -> discard; no segment within radius -> discard;
//   one candidate -> it; several -> nearest road-type match, else nearest.
// Distance ties go to the smaller segment id. `threads` > 1 splits the work;
// the result does not depend on it.
AssignmentResult assign_images(const std::vector<ImageInput>& images,
                               const network::RoadNetwork& network, const geo::GridIndex& index,
                               double radius_m, unsigned threads = 1);

std::string to_audit_csv(const std::vector<ImagePlacement>& placements);

} // namespace surfaceai::assignment
