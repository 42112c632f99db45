#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "surfaceai/aggregation.hpp"
#include "surfaceai/segment_id.hpp"
#include "surfaceai/taxonomy.hpp"

namespace surfaceai::metrics {

struct ClassificationMetrics {
    double accuracy = 0.0;
    std::map<std::string, double> per_class_f1;
    double weighted_f1 = 0.0;  // weighted by true-class support
    double macro_f1 = 0.0;     // over every label seen on either side
};

// Throws ContractViolation on empty input.
ClassificationMetrics classification_metrics(
    const std::vector<std::pair<std::string, std::string>>& predicted_true);

// Pearson correlation of average ranks. Throws ContractViolation on length
// mismatch, fewer than two points, or a constant side.
double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys);

// Fraction of pairs within one ordinal class. Classes are coded 1..5.
double one_off_accuracy(const std::vector<std::pair<int, int>>& predicted_true);

// Share of segments with status ok.
double coverage(const std::vector<aggregation::SegmentAggregate>& aggregates);

struct LabeledSample {
    SegmentId segment_id;
    std::optional<SurfaceType> true_surface_type;
    std::optional<QualityClass> true_quality_class;
};

// CSV `segment_id,true_surface_type,true_quality_class`; blank fields allowed
// but not both on one row.
std::vector<LabeledSample> parse_truth_csv(std::string_view contents);
std::vector<LabeledSample> load_truth_file(const std::filesystem::path& path);
std::string to_truth_csv(const std::vector<LabeledSample>& samples);

struct EvalReport {
    std::size_t n = 0;                 // truth rows
    std::size_t n_type_pairs = 0;
    std::size_t n_quality_pairs = 0;
    std::size_t excluded_type = 0;     // truth present, prediction missing (or vice versa)
    std::size_t excluded_quality = 0;
    std::size_t unknown_segments = 0;  // truth rows naming no aggregated segment
    std::optional<double> type_accuracy;
    std::map<std::string, double> per_class_f1;
    std::optional<double> weighted_f1;
    std::optional<double> macro_f1;
    std::optional<double> quality_accuracy;
    std::optional<double> one_off_accuracy;
    std::optional<double> spearman;  // continuous quality_mean vs integer truth
    std::optional<double> coverage;
};

EvalReport evaluate(const std::vector<aggregation::SegmentAggregate>& aggregates,
                    const std::vector<LabeledSample>& truth);

std::string to_json(const EvalReport& report);
std::string to_text(const EvalReport& report);

} // namespace surfaceai::metrics
