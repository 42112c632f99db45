#include "surfaceai/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "surfaceai/errors.hpp"

namespace surfaceai::aggregation {

namespace {

// Order-independent mean, clamped into [min, max] of the inputs so rounding
// can never push it outside.
double stable_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    const double mean = sum / static_cast<double>(values.size());
    return std::clamp(mean, values.front(), values.back());
}

// Index of the strict maximum, or nullopt when the top count is shared.
template <typename Counts>
std::optional<std::size_t> strict_winner(const Counts& counts) {
    std::optional<std::size_t> best;
    bool tied = false;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!best || counts[i] > counts[*best]) {
            best = i;
            tied = false;
        } else if (counts[i] == counts[*best]) {
            tied = true;
        }
    }
    if (tied) return std::nullopt;
    return best;
}

} // namespace

void validate(const Config& c) {
    if (!(c.subsegment_m > 0.0)) throw ContractViolation("subsegment length must be positive");
    if (c.min_agreeing < 1) throw ContractViolation("min_agreeing must be at least 1");
    if (!(c.min_fraction > 0.0 && c.min_fraction <= 1.0))
        throw ContractViolation("min_fraction must lie in (0, 1]");
    if (!(c.min_confidence >= 0.0 && c.min_confidence <= 1.0))
        throw ContractViolation("min_confidence must lie in [0, 1]");
}

std::string_view to_string(Status s) noexcept {
    switch (s) {
    case Status::ok: return "ok";
    case Status::insufficient_coverage: return "insufficient_coverage";
    case Status::ambiguous_type: return "ambiguous_type";
    case Status::no_images: return "no_images";
    }
    return "?";
}

std::optional<Status> parse_status(std::string_view s) noexcept {
    for (auto st : {Status::ok, Status::insufficient_coverage, Status::ambiguous_type, Status::no_images})
        if (to_string(st) == s) return st;
    return std::nullopt;
}

std::vector<SubsegmentAggregate> aggregate_subsegments(const std::vector<PlacedPrediction>& placements,
                                                       const network::RoadSegment& segment,
                                                       const geo::LocalFrame& frame, double step_m,
                                                       int min_agreeing) {
    if (!(step_m > 0.0)) throw ContractViolation("subsegment length must be positive");
    if (min_agreeing < 1) throw ContractViolation("min_agreeing must be at least 1");

    const auto pieces = geo::split_polyline(segment.geometry, step_m, frame);
    const std::size_t n = pieces.size();
    const double length = pieces.back().end_chainage_m;
    constexpr double kTolerance = 1e-6;

    std::vector<SubsegmentAggregate> subs(n);
    std::vector<std::vector<const Prediction*>> members(n);
    for (std::size_t k = 0; k < n; ++k) {
        subs[k].segment_id = segment.id;
        subs[k].sub_index = k;
        subs[k].start_chainage_m = pieces[k].start_chainage_m;
        subs[k].end_chainage_m = pieces[k].end_chainage_m;
    }

    for (const auto& pp : placements) {
        const auto& pl = *pp.placement;
        if (!(pl.segment_id == segment.id))
            throw ContractViolation("placement of " + pl.image_id + " belongs to segment " +
                                    pl.segment_id.str() + ", not " + segment.id.str());
        const double c = pl.chainage_m;
        if (!(c >= -kTolerance && c <= length + kTolerance))
            throw ContractViolation("placement chainage " + std::to_string(c) +
                                    " m outside segment " + segment.id.str());
        // half-open [k*step, (k+1)*step); the segment end falls in the last slice
        const auto after = std::upper_bound(
            subs.begin(), subs.end(), c,
            [](double v, const SubsegmentAggregate& s) { return v < s.start_chainage_m; });
        const auto k = after == subs.begin() ? std::size_t{0}
                                             : static_cast<std::size_t>(after - subs.begin()) - 1;
        members[k].push_back(pp.prediction);
    }

    for (std::size_t k = 0; k < n; ++k) {
        auto& sub = subs[k];
        for (const auto* p : members[k]) {
            ++sub.type_votes[static_cast<std::size_t>(p->surface_type)];
            ++sub.image_count;
        }
        const auto winner = strict_winner(sub.type_votes);
        if (!winner || sub.type_votes[*winner] < min_agreeing) continue;
        sub.surface_type = kSurfaceTypes[*winner];
        std::vector<double> qualities;
        for (const auto* p : members[k])
            if (p->surface_type == *sub.surface_type) qualities.push_back(p->quality.value());
        sub.quality_n = static_cast<int>(qualities.size());
        sub.quality_mean = stable_mean(std::move(qualities));
    }
    return subs;
}

SegmentAggregate aggregate_segment(std::vector<SubsegmentAggregate> subs, double min_fraction) {
    if (subs.empty()) throw ContractViolation("segment aggregation needs at least one subsegment");
    if (!(min_fraction > 0.0 && min_fraction <= 1.0))
        throw ContractViolation("min_fraction must lie in (0, 1]");

    SegmentAggregate seg;
    seg.segment_id = subs.front().segment_id;
    seg.n_subsegments = subs.size();
    std::array<std::size_t, kSurfaceTypes.size()> type_counts{};
    std::vector<double> means;
    for (const auto& s : subs) {
        if (!(s.segment_id == seg.segment_id))
            throw ContractViolation("subsegments from different segments");
        seg.image_count += s.image_count;
        if (!s.surface_type) continue;
        ++seg.n_classified;
        ++type_counts[static_cast<std::size_t>(*s.surface_type)];
        if (s.quality_mean) means.push_back(*s.quality_mean);
    }
    seg.subsegments = std::move(subs);

    const double fraction =
        static_cast<double>(seg.n_classified) / static_cast<double>(seg.n_subsegments);
    if (seg.image_count == 0) {
        seg.status = Status::no_images;
        return seg;
    }
    if (seg.n_classified == 0 || fraction < min_fraction) {
        seg.status = Status::insufficient_coverage;
        return seg;
    }
    const auto winner = strict_winner(type_counts);
    if (!winner) {
        seg.status = Status::ambiguous_type;
        return seg;
    }
    seg.status = Status::ok;
    seg.surface_type = kSurfaceTypes[*winner];
    // Subsegment means are combined unweighted; summation order is the
    // sorted order so the result is reproducible.
    seg.quality_mean = stable_mean(std::move(means));
    seg.quality_class = quality_to_class(QualityScore(*seg.quality_mean));
    return seg;
}

std::vector<SegmentAggregate> aggregate_network(const std::vector<assignment::ImagePlacement>& placements,
                                                const PredictionMap& predictions,
                                                const network::RoadNetwork& network,
                                                const Config& config) {
    validate(config);
    std::map<SegmentId, std::vector<PlacedPrediction>> by_segment;
    for (const auto& pl : placements) {
        const auto it = predictions.find(pl.image_id);
        if (it == predictions.end())
            throw ContractViolation("placement " + pl.image_id + " has no prediction");
        if (!network.find(pl.segment_id))
            throw ContractViolation("placement " + pl.image_id + " refers to unknown segment " +
                                    pl.segment_id.str());
        if (it->second.surface_type_conf < config.min_confidence) continue;
        by_segment[pl.segment_id].push_back({&pl, &it->second});
    }

    std::vector<SegmentAggregate> out;
    out.reserve(network.segments().size());
    static const std::vector<PlacedPrediction> kNone;
    for (const auto& seg : network.segments()) {
        const auto it = by_segment.find(seg.id);
        auto subs = aggregate_subsegments(it == by_segment.end() ? kNone : it->second, seg,
                                          network.frame(), config.subsegment_m, config.min_agreeing);
        out.push_back(aggregate_segment(std::move(subs), config.min_fraction));
    }
    return out;
}

} // namespace surfaceai::aggregation
