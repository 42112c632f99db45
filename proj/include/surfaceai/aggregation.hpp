#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "surfaceai/assignment.hpp"
#include "surfaceai/classifier.hpp"
#include "surfaceai/road_network.hpp"

namespace surfaceai::aggregation {

struct Config {
    double subsegment_m = 20.0;
    int min_agreeing = 3;        // agreeing type votes a subsegment needs
    double min_fraction = 0.5;   // classified share of subsegments a segment needs
    double min_confidence = 0.0; // images with lower surface_type_conf do not vote
};

// Throws ContractViolation for non-positive step, min_agreeing < 1 or
// min_fraction outside (0, 1].
void validate(const Config& config);

using TypeVotes = std::array<int, kSurfaceTypes.size()>;

struct SubsegmentAggregate {
    SegmentId segment_id;
    std::size_t sub_index = 0;
    double start_chainage_m = 0.0;
    double end_chainage_m = 0.0;
    int image_count = 0;
    TypeVotes type_votes{};
    std::optional<SurfaceType> surface_type;
    std::optional<double> quality_mean;
    int quality_n = 0;

    int votes(SurfaceType t) const { return type_votes[static_cast<std::size_t>(t)]; }
    friend bool operator==(const SubsegmentAggregate&, const SubsegmentAggregate&) = default;
};

enum class Status { ok, insufficient_coverage, ambiguous_type, no_images };
std::string_view to_string(Status s) noexcept;
std::optional<Status> parse_status(std::string_view s) noexcept;

struct SegmentAggregate {
    SegmentId segment_id;
    std::size_t n_subsegments = 0;
    std::size_t n_classified = 0;
    int image_count = 0;
    std::optional<SurfaceType> surface_type;
    std::optional<double> quality_mean;
    std::optional<QualityClass> quality_class;
    Status status = Status::no_images;
    std::vector<SubsegmentAggregate> subsegments;

    friend bool operator==(const SegmentAggregate&, const SegmentAggregate&) = default;
};

struct PlacedPrediction {
    const assignment::ImagePlacement* placement;
    const Prediction* prediction;
};

// Buckets placements into `step`-meter chainage slices of the segment
// ([start, end) except the last, which is closed) and classifies each slice
// by strict plurality with at least `min_agreeing` votes. The quality mean
// only uses images whose predicted type equals the winner.
std::vector<SubsegmentAggregate> aggregate_subsegments(const std::vector<PlacedPrediction>& placements,
                                                       const network::RoadSegment& segment,
                                                       const geo::LocalFrame& frame, double step_m,
                                                       int min_agreeing);

// Combines slices with equal weight: type by strict mode over classified
// slices, quality as the plain mean of their means.
SegmentAggregate aggregate_segment(std::vector<SubsegmentAggregate> subs, double min_fraction);

// One aggregate per network segment, sorted by segment id.
std::vector<SegmentAggregate> aggregate_network(const std::vector<assignment::ImagePlacement>& placements,
                                                const PredictionMap& predictions,
                                                const network::RoadNetwork& network,
                                                const Config& config);

} // namespace surfaceai::aggregation
