#pragma once

// Brute-force reference implementations used only by tests. They are kept
// deliberately naive: no index, no sorting tricks, plain loops and maps.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "surfaceai/aggregation.hpp"
#include "surfaceai/assignment.hpp"
#include "surfaceai/geo.hpp"

namespace oracle {

using surfaceai::geo::GeoPoint;

struct P {
    double x, y;
};

// Equirectangular meters around `origin`, written out from first principles.
inline P planar(const GeoPoint& p, const GeoPoint& origin) {
    const double m_per_deg = 6371008.8 * std::numbers::pi / 180.0;
    return {(p.lon - origin.lon) * m_per_deg * std::cos(origin.lat * std::numbers::pi / 180.0),
            (p.lat - origin.lat) * m_per_deg};
}

inline double dist(P a, P b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline std::vector<double> cumulative(const std::vector<GeoPoint>& pts, const GeoPoint& origin) {
    std::vector<double> cum{0.0};
    for (std::size_t i = 1; i < pts.size(); ++i)
        cum.push_back(cum.back() + dist(planar(pts[i - 1], origin), planar(pts[i], origin)));
    return cum;
}

struct Proj {
    double distance;
    double chainage;
};

// Samples every edge's closed-form foot point; ties keep the earliest edge.
inline Proj project(const GeoPoint& p, const std::vector<GeoPoint>& pts, const GeoPoint& origin) {
    const auto cum = cumulative(pts, origin);
    const P q = planar(p, origin);
    Proj best{INFINITY, 0.0};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const P a = planar(pts[i], origin), b = planar(pts[i + 1], origin);
        const double len = dist(a, b);
        double t = len == 0 ? 0.0 : ((q.x - a.x) * (b.x - a.x) + (q.y - a.y) * (b.y - a.y)) / (len * len);
        t = std::min(1.0, std::max(0.0, t));
        const P f{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
        const double d = dist(q, f);
        if (d < best.distance) best = {d, cum[i] + t * len};
    }
    return best;
}

inline std::vector<GeoPoint> vertices(const surfaceai::geo::Polyline& line) {
    return {line.vertices().begin(), line.vertices().end()};
}

// Every segment whose distance to p is <= radius, by scanning them all.
inline std::set<surfaceai::SegmentId> within(const surfaceai::network::RoadNetwork& net, const GeoPoint& p,
                                             double radius) {
    std::set<surfaceai::SegmentId> out;
    for (const auto& s : net.segments())
        if (project(p, vertices(s.geometry), net.frame().origin()).distance <= radius) out.insert(s.id);
    return out;
}

// Assignment steps (1)-(5) over every segment of the network, no index.
// The distance primitive is the library projection (verified separately
// against `project` above) so that exact ties resolve the same way.
struct Placed {
    std::string image_id;
    surfaceai::SegmentId segment;
    double chainage;
    double distance;
    surfaceai::assignment::Disambiguation how;
};
struct AssignOutcome {
    std::optional<Placed> placed;
    std::optional<surfaceai::assignment::DiscardReason> discard;
};

inline bool matches(const surfaceai::network::RoadSegment& s, surfaceai::RoadType predicted) {
    using surfaceai::RoadType;
    if (!s.mapped_road_type) return false;
    if (*s.mapped_road_type == predicted) return true;
    if (predicted != RoadType::bike_lane || *s.mapped_road_type != RoadType::roadway) return false;
    for (const char* k : {"cycleway", "cycleway:both", "cycleway:left", "cycleway:right"}) {
        auto it = s.tags.find(k);
        if (it != s.tags.end() && it->second == "lane") return true;
    }
    return false;
}

inline AssignOutcome assign(const surfaceai::imagery::ImageRecord& img, const surfaceai::Prediction& pred,
                            const surfaceai::network::RoadNetwork& net, double radius) {
    using namespace surfaceai;
    using assignment::Disambiguation;
    if (pred.road_type == RoadType::no_focus) return {std::nullopt, assignment::DiscardReason::no_focus};
    struct C {
        const network::RoadSegment* seg;
        geo::Projection pr;
    };
    std::vector<C> cands;
    for (const auto& s : net.segments()) {
        const auto pr = geo::project_point_to_polyline(img.position, s.geometry, net.frame());
        if (pr.distance_m <= radius) cands.push_back({&s, pr});
    }
    if (cands.empty()) return {std::nullopt, assignment::DiscardReason::out_of_range};
    auto nearest = [](const std::vector<C>& v) {
        const C* b = &v[0];
        for (const auto& c : v)
            if (c.pr.distance_m < b->pr.distance_m || (c.pr.distance_m == b->pr.distance_m && c.seg->id < b->seg->id))
                b = &c;
        return *b;
    };
    auto mk = [&](const C& c, Disambiguation how) {
        const double ch = std::min(std::max(c.pr.chainage_m, 0.0), c.seg->length_m);
        return AssignOutcome{Placed{img.image_id, c.seg->id, ch, c.pr.distance_m, how}, std::nullopt};
    };
    if (cands.size() == 1) return mk(cands[0], Disambiguation::single_candidate);
    std::vector<C> typed;
    for (const auto& c : cands)
        if (matches(*c.seg, pred.road_type)) typed.push_back(c);
    if (!typed.empty()) return mk(nearest(typed), Disambiguation::road_type_match);
    return mk(nearest(cands), Disambiguation::nearest_fallback);
}

// Two-level aggregation straight from the rules, for one segment.
struct AggVote {
    double chainage;
    surfaceai::SurfaceType type;
    double quality;
};
struct AggResult {
    std::size_t n_sub = 0;
    std::size_t n_classified = 0;
    int images = 0;
    std::vector<std::optional<surfaceai::SurfaceType>> sub_types;
    std::vector<std::optional<double>> sub_means;
    std::optional<surfaceai::SurfaceType> type;
    std::optional<double> quality;
    surfaceai::aggregation::Status status = surfaceai::aggregation::Status::no_images;
};

inline AggResult aggregate(const std::vector<AggVote>& votes, double length, double step, int min_agreeing,
                           double min_fraction) {
    using surfaceai::SurfaceType;
    using surfaceai::aggregation::Status;
    AggResult r;
    std::size_t n = 1;
    while (static_cast<double>(n) * step < length - 1e-9 * step) ++n;
    r.n_sub = n;
    std::vector<std::vector<AggVote>> bucket(n);
    for (const auto& v : votes) {
        std::size_t k = 0;
        while (k + 1 < n && static_cast<double>(k + 1) * step <= v.chainage) ++k;
        bucket[k].push_back(v);
    }
    std::map<SurfaceType, int> seg_votes;
    std::vector<double> means;
    for (std::size_t k = 0; k < n; ++k) {
        std::map<SurfaceType, int> c;
        for (const auto& v : bucket[k]) ++c[v.type];
        r.images += static_cast<int>(bucket[k].size());
        int top = 0, top_n = 0;
        SurfaceType top_t{};
        for (const auto& [t, cnt] : c) {
            if (cnt > top) {
                top = cnt;
                top_t = t;
                top_n = 1;
            } else if (cnt == top) {
                ++top_n;
            }
        }
        if (top_n == 1 && top >= min_agreeing) {
            double sum = 0;
            int m = 0;
            for (const auto& v : bucket[k])
                if (v.type == top_t) {
                    sum += v.quality;
                    ++m;
                }
            r.sub_types.push_back(top_t);
            r.sub_means.push_back(sum / m);
            ++r.n_classified;
            ++seg_votes[top_t];
            means.push_back(sum / m);
        } else {
            r.sub_types.push_back(std::nullopt);
            r.sub_means.push_back(std::nullopt);
        }
    }
    if (r.images == 0) return r;
    if (r.n_classified == 0 || static_cast<double>(r.n_classified) < min_fraction * static_cast<double>(n)) {
        r.status = Status::insufficient_coverage;
        return r;
    }
    int top = 0, top_n = 0;
    SurfaceType top_t{};
    for (const auto& [t, cnt] : seg_votes) {
        if (cnt > top) {
            top = cnt;
            top_t = t;
            top_n = 1;
        } else if (cnt == top) {
            ++top_n;
        }
    }
    if (top_n != 1) {
        r.status = Status::ambiguous_type;
        return r;
    }
    r.status = Status::ok;
    r.type = top_t;
    double sum = 0;
    for (double m : means) sum += m;
    r.quality = sum / static_cast<double>(means.size());
    return r;
}

// Classification metrics from the textbook definitions.
struct Cls {
    double accuracy;
    std::map<std::string, double> f1;
    double weighted;
    double macro;
};

inline Cls classification(const std::vector<std::pair<std::string, std::string>>& pt) {
    std::set<std::string> labels;
    for (const auto& [p, t] : pt) {
        labels.insert(p);
        labels.insert(t);
    }
    Cls c{0, {}, 0, 0};
    int correct = 0;
    for (const auto& [p, t] : pt) correct += p == t;
    c.accuracy = static_cast<double>(correct) / static_cast<double>(pt.size());
    for (const auto& l : labels) {
        int tp = 0, fp = 0, fn = 0;
        for (const auto& [p, t] : pt) {
            if (p == l && t == l) ++tp;
            if (p == l && t != l) ++fp;
            if (p != l && t == l) ++fn;
        }
        const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        c.f1[l] = f;
        c.weighted += f * (tp + fn);
        c.macro += f;
    }
    c.weighted /= static_cast<double>(pt.size());
    c.macro /= static_cast<double>(labels.size());
    return c;
}

// Average rank by counting: 1 + (#smaller) + (#equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<double> r;
    for (double a : v) {
        int less = 0, eq = 0;
        for (double b : v) {
            less += b < a;
            eq += b == a;
        }
        r.push_back(1.0 + less + (eq - 1) / 2.0);
    }
    return r;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double one_off(const std::vector<std::pair<int, int>>& pt) {
    int ok = 0;
    for (const auto& [p, t] : pt) ok += (p - t <= 1 && t - p <= 1);
    return static_cast<double>(ok) / static_cast<double>(pt.size());
}

} // namespace oracle
