#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "surfaceai/road_network.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) {
    return std::filesystem::path(SURFACEAI_FIXTURE_DIR) / name;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("surfaceai-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline constexpr surfaceai::geo::GeoPoint kOrigin{13.40, 52.52};

// Point `east`/`north` meters away from `origin`, via the frame under test's
// own inverse so that generated geometry lands where the test expects.
inline surfaceai::geo::GeoPoint offset(const surfaceai::geo::LocalFrame& frame, double east, double north) {
    return frame.to_geo({east, north});
}

inline surfaceai::network::RoadSegment make_segment(std::int64_t way, std::vector<surfaceai::geo::GeoPoint> pts,
                                                    const surfaceai::geo::LocalFrame& frame,
                                                    const std::string& highway = "residential",
                                                    surfaceai::network::Tags extra = {}) {
    surfaceai::network::RoadSegment s{surfaceai::SegmentId{way, std::nullopt},
                                      surfaceai::geo::Polyline(std::move(pts)),
                                      highway,
                                      std::nullopt,
                                      std::nullopt,
                                      false,
                                      0.0,
                                      {}};
    extra["highway"] = highway;
    s.tags = extra;
    s.mapped_road_type = surfaceai::network::map_highway_to_road_type(highway, s.tags);
    s.accepts_bike_lane = surfaceai::network::has_bike_lane(s.tags);
    s.length_m = s.geometry.length(frame);
    return s;
}

inline surfaceai::network::Boundary boundary_around(surfaceai::geo::GeoPoint c, double half_deg = 0.05) {
    return {{c.lon - half_deg, c.lat - half_deg, c.lon + half_deg, c.lat + half_deg}, {}};
}

} // namespace testsupport
