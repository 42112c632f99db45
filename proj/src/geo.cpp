#include "surfaceai/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "surfaceai/errors.hpp"

namespace surfaceai::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double hypot2(double dx, double dy) noexcept { return std::sqrt(dx * dx + dy * dy); }

std::vector<double> cumulative_lengths(const std::vector<Xy>& xy) {
    std::vector<double> cum(xy.size(), 0.0);
    for (std::size_t i = 1; i < xy.size(); ++i)
        cum[i] = cum[i - 1] + hypot2(xy[i].x - xy[i - 1].x, xy[i].y - xy[i - 1].y);
    return cum;
}

std::vector<Xy> to_local_all(std::span<const GeoPoint> pts, const LocalFrame& frame) {
    std::vector<Xy> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(frame.to_local(p));
    return out;
}

// Liang-Barsky: does segment a->b touch the closed box?
bool segment_hits_box(const GeoPoint& a, const GeoPoint& b, const BBox& box) noexcept {
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.lon - a.lon, dy = b.lat - a.lat;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.lon - box.min_lon, box.max_lon - a.lon, a.lat - box.min_lat,
                         box.max_lat - a.lat};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return false;
            continue;
        }
        const double r = q[i] / p[i];
        if (p[i] < 0.0)
            t0 = std::max(t0, r);
        else
            t1 = std::min(t1, r);
        if (t0 > t1) return false;
    }
    return true;
}

} // namespace

bool is_valid(const GeoPoint& p) noexcept {
    return std::isfinite(p.lon) && std::isfinite(p.lat) && p.lon >= -180.0 && p.lon <= 180.0 &&
           p.lat >= -90.0 && p.lat <= 90.0;
}

GeoPoint checked_point(double lon, double lat) {
    GeoPoint p{lon, lat};
    if (!is_valid(p))
        throw ContractViolation("invalid coordinate (" + std::to_string(lon) + ", " +
                                std::to_string(lat) + ")");
    return p;
}

LocalFrame::LocalFrame(GeoPoint origin)
    : origin_(origin),
      m_per_deg_lon_(kEarthRadiusM * kDegToRad * std::cos(origin.lat * kDegToRad)),
      m_per_deg_lat_(kEarthRadiusM * kDegToRad) {
    if (m_per_deg_lon_ < 0.0) m_per_deg_lon_ = 0.0;
}

Xy LocalFrame::to_local(const GeoPoint& p) const noexcept {
    return {std::remainder(p.lon - origin_.lon, 360.0) * m_per_deg_lon_,
            (p.lat - origin_.lat) * m_per_deg_lat_};
}

GeoPoint LocalFrame::to_geo(const Xy& xy) const noexcept {
    const double lon = m_per_deg_lon_ > 0.0 ? origin_.lon + xy.x / m_per_deg_lon_ : origin_.lon;
    return {lon, origin_.lat + xy.y / m_per_deg_lat_};
}

double LocalFrame::distance(const GeoPoint& a, const GeoPoint& b) const noexcept {
    const Xy pa = to_local(a), pb = to_local(b);
    return hypot2(pa.x - pb.x, pa.y - pb.y);
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
    const double s_lat = std::sin((b.lat - a.lat) * kDegToRad / 2.0);
    const double s_lon = std::sin((b.lon - a.lon) * kDegToRad / 2.0);
    const double h = s_lat * s_lat +
                     std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * s_lon * s_lon;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

Polyline::Polyline(std::vector<GeoPoint> vertices) {
    vertices_.reserve(vertices.size());
    for (const auto& v : vertices) {
        if (!is_valid(v)) throw ContractViolation("polyline vertex out of range");
        if (vertices_.empty() || !(vertices_.back() == v)) vertices_.push_back(v);
    }
    if (vertices_.size() < 2)
        throw ContractViolation("polyline needs at least 2 distinct vertices");
}

double Polyline::length(const LocalFrame& frame) const noexcept {
    double total = 0.0;
    Xy prev = frame.to_local(vertices_.front());
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
        const Xy cur = frame.to_local(vertices_[i]);
        total += hypot2(cur.x - prev.x, cur.y - prev.y);
        prev = cur;
    }
    return total;
}

BBox checked_bbox(double min_lon, double min_lat, double max_lon, double max_lat) {
    checked_point(min_lon, min_lat);
    checked_point(max_lon, max_lat);
    if (min_lon > max_lon || min_lat > max_lat)
        throw ContractViolation("bounding box min exceeds max");
    return {min_lon, min_lat, max_lon, max_lat};
}

bool intersects(const Polyline& line, const BBox& box) noexcept {
    const auto v = line.vertices();
    for (const auto& p : v)
        if (box.contains(p)) return true;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (segment_hits_box(v[i - 1], v[i], box)) return true;
    return false;
}

Projection project_point_to_polyline(const GeoPoint& p, const Polyline& line,
                                     const LocalFrame& frame) noexcept {
    const auto v = line.vertices();
    const Xy q = frame.to_local(p);
    Projection best;
    best.distance_m = std::numeric_limits<double>::infinity();

    double cum = 0.0;
    Xy a = frame.to_local(v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) {
        const Xy b = frame.to_local(v[i]);
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len2 = dx * dx + dy * dy;
        double t = 0.0;
        if (len2 > 0.0) t = std::clamp(((q.x - a.x) * dx + (q.y - a.y) * dy) / len2, 0.0, 1.0);
        const double len = std::sqrt(len2);
        const double fx = a.x + t * dx, fy = a.y + t * dy;
        const double d = hypot2(q.x - fx, q.y - fy);
        if (d < best.distance_m) {
            best.distance_m = d;
            best.chainage_m = cum + t * len;
            if (t == 0.0)
                best.foot = v[i - 1];
            else if (t == 1.0)
                best.foot = v[i];
            else
                best.foot = frame.to_geo({fx, fy});
        }
        cum += len;
        a = b;
    }
    best.chainage_m = std::clamp(best.chainage_m, 0.0, cum);
    return best;
}

std::size_t piece_count(double length_m, double step_m) {
    if (!(step_m > 0.0)) throw ContractViolation("subsegment step must be positive");
    if (!(length_m > 0.0)) return 1;
    auto n = static_cast<std::size_t>(std::ceil(length_m / step_m));
    if (n > 1 && length_m - static_cast<double>(n - 1) * step_m <= 1e-9 * step_m) --n;
    return std::max<std::size_t>(n, 1);
}

std::vector<SubPolyline> split_polyline(const Polyline& line, double step_m,
                                        const LocalFrame& frame) {
    const std::size_t n = piece_count(line.length(frame), step_m);
    if (n == 1) return {SubPolyline{0, line, 0.0, line.length(frame)}};

    const auto v = line.vertices();
    const auto xy = to_local_all(v, frame);
    const auto cum = cumulative_lengths(xy);
    const double total = cum.back();
    const double tol = 1e-12 * step_m;

    // Point at chainage c, reusing an original vertex when c falls on one.
    auto point_at = [&](double c) -> GeoPoint {
        const auto it = std::upper_bound(cum.begin(), cum.end(), c);
        std::size_t i = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
        if (i >= cum.size() - 1) return v.back();
        if (c - cum[i] <= tol) return v[i];
        if (cum[i + 1] - c <= tol) return v[i + 1];
        const double t = (c - cum[i]) / (cum[i + 1] - cum[i]);
        return frame.to_geo(
            {xy[i].x + t * (xy[i + 1].x - xy[i].x), xy[i].y + t * (xy[i + 1].y - xy[i].y)});
    };

    std::vector<SubPolyline> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = static_cast<double>(k) * step_m;
        const double e = k + 1 == n ? total : static_cast<double>(k + 1) * step_m;
        std::vector<GeoPoint> pts;
        pts.push_back(k == 0 ? v.front() : point_at(s));
        for (std::size_t i = 0; i < cum.size(); ++i)
            if (cum[i] > s + tol && cum[i] < e - tol) pts.push_back(v[i]);
        pts.push_back(k + 1 == n ? v.back() : point_at(e));
        out.push_back(SubPolyline{k, Polyline(std::move(pts)), s, e});
    }
    return out;
}

GridIndex::GridIndex(std::span<const Entry> segments, double cell_size_m, double radius_m,
                     const LocalFrame& frame)
    : cell_size_(cell_size_m), radius_(radius_m), frame_(frame) {
    if (!(cell_size_m > 0.0)) throw ContractViolation("grid cell size must be positive");
    if (!(radius_m >= 0.0)) throw ContractViolation("grid build radius must be non-negative");

    std::vector<Entry> sorted(segments.begin(), segments.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const Entry& a, const Entry& b) { return a.id < b.id; });
    ids_.reserve(sorted.size());
    for (std::uint32_t slot = 0; slot < sorted.size(); ++slot) {
        const auto& entry = sorted[slot];
        ids_.push_back(entry.id);
        double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
        double max_x = -min_x, max_y = -min_x;
        for (const auto& p : entry.geometry->vertices()) {
            const Xy q = frame_.to_local(p);
            min_x = std::min(min_x, q.x);
            min_y = std::min(min_y, q.y);
            max_x = std::max(max_x, q.x);
            max_y = std::max(max_y, q.y);
        }
        const auto cx0 = cell_of(min_x - radius_), cx1 = cell_of(max_x + radius_);
        const auto cy0 = cell_of(min_y - radius_), cy1 = cell_of(max_y + radius_);
        for (auto cx = cx0; cx <= cx1; ++cx)
            for (auto cy = cy0; cy <= cy1; ++cy) cells_[key(cx, cy)].push_back(slot);
    }
}

std::vector<SegmentId> GridIndex::query(const GeoPoint& p, double radius_m) const {
    if (radius_m > radius_)
        throw ContractViolation("query radius " + std::to_string(radius_m) +
                                " m exceeds index build radius " + std::to_string(radius_) + " m");
    const Xy q = frame_.to_local(p);
    const auto it = cells_.find(key(cell_of(q.x), cell_of(q.y)));
    if (it == cells_.end()) return {};
    std::vector<SegmentId> out;
    out.reserve(it->second.size());
    // slots were assigned in id order and appended in increasing slot order
    for (auto slot : it->second) out.push_back(ids_[slot]);
    return out;
}

std::uint64_t GridIndex::key(std::int64_t cx, std::int64_t cy) noexcept {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cx)) << 32) |
           static_cast<std::uint32_t>(cy);
}

std::int64_t GridIndex::cell_of(double v) const noexcept {
    return static_cast<std::int64_t>(std::floor(v / cell_size_));
}

} // namespace surfaceai::geo
