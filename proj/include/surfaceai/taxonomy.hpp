#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace surfaceai {

enum class SurfaceType { asphalt, concrete, paving_stones, sett, unpaved };
inline constexpr std::array kSurfaceTypes{SurfaceType::asphalt, SurfaceType::concrete,
                                          SurfaceType::paving_stones, SurfaceType::sett,
                                          SurfaceType::unpaved};

// Which part of the street an image focuses on. `no_focus` means no road or
// no single focus area visible.
enum class RoadType { roadway, bike_lane, cycleway, sidewalk, path, no_focus };
inline constexpr std::array kRoadTypes{RoadType::roadway,  RoadType::bike_lane,
                                       RoadType::cycleway, RoadType::sidewalk,
                                       RoadType::path,     RoadType::no_focus};

// Ordinal quality; the underlying value is the numeric encoding (1 = best).
enum class QualityClass { excellent = 1, good = 2, intermediate = 3, bad = 4, very_bad = 5 };
inline constexpr std::array kQualityClasses{QualityClass::excellent, QualityClass::good,
                                            QualityClass::intermediate, QualityClass::bad,
                                            QualityClass::very_bad};

std::string_view to_string(SurfaceType t) noexcept;
std::string_view to_string(RoadType t) noexcept;
std::string_view to_string(QualityClass q) noexcept;

std::optional<SurfaceType> parse_surface_type(std::string_view s) noexcept;
std::optional<RoadType> parse_road_type(std::string_view s) noexcept;
// Accepts the class name or its numeric code "1".."5".
std::optional<QualityClass> parse_quality_class(std::string_view s) noexcept;

inline int quality_code(QualityClass q) noexcept { return static_cast<int>(q); }

// Continuous quality on [1, 5], 1 = excellent, 5 = very bad.
class QualityScore {
public:
    static constexpr double kMin = 1.0;
    static constexpr double kMax = 5.0;

    // Throws ContractViolation when not finite or outside [1, 5].
    explicit QualityScore(double value);

    double value() const noexcept { return value_; }

    friend bool operator==(const QualityScore&, const QualityScore&) = default;

private:
    double value_;
};

// Rounds half away from zero to the nearest of 1..5.
QualityClass quality_to_class(QualityScore q) noexcept;

} // namespace surfaceai
