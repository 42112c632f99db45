#include "surfaceai/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "surfaceai/errors.hpp"

namespace surfaceai {

std::string_view to_string(SurfaceType t) noexcept {
    switch (t) {
    case SurfaceType::asphalt: return "asphalt";
    case SurfaceType::concrete: return "concrete";
    case SurfaceType::paving_stones: return "paving_stones";
    case SurfaceType::sett: return "sett";
    case SurfaceType::unpaved: return "unpaved";
    }
    return "?";
}

std::string_view to_string(RoadType t) noexcept {
    switch (t) {
    case RoadType::roadway: return "roadway";
    case RoadType::bike_lane: return "bike_lane";
    case RoadType::cycleway: return "cycleway";
    case RoadType::sidewalk: return "sidewalk";
    case RoadType::path: return "path";
    case RoadType::no_focus: return "no_focus";
    }
    return "?";
}

std::string_view to_string(QualityClass q) noexcept {
    switch (q) {
    case QualityClass::excellent: return "excellent";
    case QualityClass::good: return "good";
    case QualityClass::intermediate: return "intermediate";
    case QualityClass::bad: return "bad";
    case QualityClass::very_bad: return "very_bad";
    }
    return "?";
}

std::optional<SurfaceType> parse_surface_type(std::string_view s) noexcept {
    for (auto t : kSurfaceTypes)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::optional<RoadType> parse_road_type(std::string_view s) noexcept {
    for (auto t : kRoadTypes)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::optional<QualityClass> parse_quality_class(std::string_view s) noexcept {
    for (auto q : kQualityClasses)
        if (to_string(q) == s) return q;
    if (s.size() == 1 && s[0] >= '1' && s[0] <= '5') return static_cast<QualityClass>(s[0] - '0');
    return std::nullopt;
}

QualityScore::QualityScore(double value) : value_(value) {
    if (!std::isfinite(value) || value < kMin || value > kMax)
        throw ContractViolation("quality score " + std::to_string(value) + " outside [1, 5]");
}

QualityClass quality_to_class(QualityScore q) noexcept {
    // std::round rounds half away from zero
    const auto code = static_cast<int>(std::round(q.value()));
    return static_cast<QualityClass>(std::clamp(code, 1, 5));
}

} // namespace surfaceai
