#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "surfaceai/segment_id.hpp"

namespace surfaceai::geo {

inline constexpr double kEarthRadiusM = 6'371'008.8;

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p) noexcept;

// Throws ContractViolation for non-finite or out-of-range coordinates.
GeoPoint checked_point(double lon, double lat);

// Planar point in meters, relative to a LocalFrame origin (x east, y north).
struct Xy {
    double x = 0.0;
    double y = 0.0;
};

// Equirectangular projection around an origin. Accurate to well below a
// centimeter per 100 m within a few km of the origin.
class LocalFrame {
public:
    LocalFrame() : LocalFrame(GeoPoint{}) {}
    explicit LocalFrame(GeoPoint origin);

    const GeoPoint& origin() const noexcept { return origin_; }
    double meters_per_deg_lon() const noexcept { return m_per_deg_lon_; }
    double meters_per_deg_lat() const noexcept { return m_per_deg_lat_; }

    Xy to_local(const GeoPoint& p) const noexcept;
    GeoPoint to_geo(const Xy& xy) const noexcept;
    double distance(const GeoPoint& a, const GeoPoint& b) const noexcept;

private:
    GeoPoint origin_;
    double m_per_deg_lon_;
    double m_per_deg_lat_;
};

// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

// Ordered vertex list with at least two distinct consecutive vertices.
// Consecutive duplicates are removed on construction.
class Polyline {
public:
    explicit Polyline(std::vector<GeoPoint> vertices);

    std::span<const GeoPoint> vertices() const noexcept { return vertices_; }
    std::size_t size() const noexcept { return vertices_.size(); }
    const GeoPoint& front() const noexcept { return vertices_.front(); }
    const GeoPoint& back() const noexcept { return vertices_.back(); }

    double length(const LocalFrame& frame) const noexcept;

    friend bool operator==(const Polyline&, const Polyline&) = default;

private:
    std::vector<GeoPoint> vertices_;
};

struct BBox {
    double min_lon = 0.0;
    double min_lat = 0.0;
    double max_lon = 0.0;
    double max_lat = 0.0;

    bool contains(const GeoPoint& p) const noexcept {
        return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
    }
    GeoPoint center() const noexcept {
        return {(min_lon + max_lon) / 2.0, (min_lat + max_lat) / 2.0};
    }
    friend bool operator==(const BBox&, const BBox&) = default;
};

// Throws ContractViolation unless min <= max and all corners are valid.
BBox checked_bbox(double min_lon, double min_lat, double max_lon, double max_lat);

// True if any part of the polyline lies inside or on the box.
bool intersects(const Polyline& line, const BBox& box) noexcept;

struct Projection {
    double distance_m = 0.0;
    double chainage_m = 0.0;
    GeoPoint foot;
};

Projection project_point_to_polyline(const GeoPoint& p, const Polyline& line,
                                     const LocalFrame& frame) noexcept;

struct SubPolyline {
    std::size_t index = 0;
    Polyline geometry;
    double start_chainage_m = 0.0;
    double end_chainage_m = 0.0;
};

// Number of pieces a line of `length_m` is cut into at `step_m`.
// ceil(length/step), ignoring a trailing remainder below 1e-9 of a step
// that only floating-point noise can produce.
std::size_t piece_count(double length_m, double step_m);

// Cuts the line into consecutive pieces of `step_m` meters (the last one may
// be shorter). Cut points are interpolated on edges in the local frame.
std::vector<SubPolyline> split_polyline(const Polyline& line, double step_m,
                                        const LocalFrame& frame);

// Uniform grid over the local frame. Each segment is registered in every cell
// its bounding box, grown by the build radius, touches, so a single cell
// lookup finds every segment within that radius of a point.
class GridIndex {
public:
    struct Entry {
        SegmentId id;
        const Polyline* geometry;
    };

    GridIndex(std::span<const Entry> segments, double cell_size_m, double radius_m,
              const LocalFrame& frame);

    // Candidate ids (sorted, unique) for all segments within `radius_m` of p.
    // May contain false positives. Throws ContractViolation when radius_m
    // exceeds the build radius.
    std::vector<SegmentId> query(const GeoPoint& p, double radius_m) const;

    std::size_t cell_count() const noexcept { return cells_.size(); }
    double cell_size() const noexcept { return cell_size_; }
    double build_radius() const noexcept { return radius_; }
    const LocalFrame& frame() const noexcept { return frame_; }

private:
    static std::uint64_t key(std::int64_t cx, std::int64_t cy) noexcept;
    std::int64_t cell_of(double v) const noexcept;

    double cell_size_;
    double radius_;
    LocalFrame frame_;
    std::vector<SegmentId> ids_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

} // namespace surfaceai::geo
