#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "surfaceai/classifier.hpp"
#include "surfaceai/imagery.hpp"
#include "surfaceai/metrics.hpp"
#include "surfaceai/road_network.hpp"

namespace surfaceai::synthlab {

enum class Layout {
    rows,  // disjoint parallel streets, >= 25 m apart
    grid   // city blocks; segments meet at intersections
};

struct ScenarioSpec {
    std::uint64_t seed = 1;
    std::size_t n_segments = 50;
    double segment_length_min_m = 60.0;
    double segment_length_max_m = 240.0;
    int images_per_subsegment_min = 4;
    int images_per_subsegment_max = 6;
    double type_noise_rate = 0.0;
    double quality_noise_sd = 0.0;
    double geotag_noise_sd_m = 0.0;
    double drop_rate = 0.0;

    // Extras for exercising assignment.
    double road_type_noise_rate = 0.0;  // predicted road type drawn from the other classes
    double no_focus_rate = 0.0;
    bool parallel_roads = false;        // cycleway 4 m beside every roadway
    bool curved = true;                 // some segments bend gently
    Layout layout = Layout::rows;
    double spacing_m = 40.0;            // between streets (rows) or block size floor (grid)
    double subsegment_m = 20.0;
    geo::GeoPoint origin{13.40, 52.52};
};

// Throws ContractViolation for rates outside [0, 1], empty ranges or a
// street spacing below 25 m.
void validate(const ScenarioSpec& spec);

struct SegmentTruth {
    SegmentId segment_id;
    SurfaceType surface_type = SurfaceType::asphalt;
    double quality = 1.0;                  // mean of the per-slice truths
    std::vector<double> subsegment_quality;
    std::vector<bool> subsegment_dropped;
};

// Where an image was really taken; hidden from the pipeline.
struct ImageTruth {
    std::string image_id;
    SegmentId segment_id;
    double chainage_m = 0.0;
    std::size_t sub_index = 0;
};

struct Scenario {
    network::RoadNetwork network;
    std::vector<SegmentTruth> truth;          // sorted by segment id
    std::vector<imagery::ImageRecord> images; // sorted by image id
    PredictionMap predictions;
    std::vector<ImageTruth> image_truth;      // sorted by image id
};

Scenario generate_scenario(const ScenarioSpec& spec);

std::vector<metrics::LabeledSample> truth_samples(const Scenario& scenario);

struct ScenarioFiles {
    std::filesystem::path network;      // GeoJSON FeatureCollection
    std::filesystem::path boundary;     // bbox text, one line
    std::filesystem::path images;       // NDJSON image records
    std::filesystem::path predictions;  // prediction CSV
    std::filesystem::path truth;        // truth CSV
    std::filesystem::path image_truth;  // image_id,segment_id,chainage_m,sub_index
};

ScenarioFiles write_scenario(const Scenario& scenario, const std::filesystem::path& dir);

// Portable draws on top of mt19937_64 so scenarios are identical across
// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();                          // [0, 1)
    double uniform(double lo, double hi);      // [lo, hi)
    int uniform_int(int lo, int hi);           // inclusive
    double normal(double mean, double sd);
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace surfaceai::synthlab
