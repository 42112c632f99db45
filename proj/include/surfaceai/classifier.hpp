#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "surfaceai/taxonomy.hpp"

namespace surfaceai {

struct Prediction {
    std::string image_id;
    RoadType road_type = RoadType::no_focus;
    double road_type_conf = 1.0;
    SurfaceType surface_type = SurfaceType::asphalt;
    double surface_type_conf = 1.0;
    QualityScore quality{QualityScore::kMin};

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Throws ContractViolation on empty id or confidences outside [0, 1].
void validate(const Prediction& p);

using PredictionMap = std::map<std::string, Prediction>;

namespace classifier {

inline constexpr std::string_view kCsvHeader =
    "image_id,road_type,road_type_conf,surface_type,surface_type_conf,quality";

enum class RowPolicy { fail_fast, lenient };

struct LoadReport {
    std::size_t rows = 0;
    std::size_t duplicates = 0;  // later rows replaced earlier ones
    std::size_t skipped = 0;     // lenient mode only
    std::vector<std::string> skipped_reasons;
};

// Parses a prediction CSV. In fail-fast mode the first bad row throws a
// ParseError naming the row and offending token.
PredictionMap parse_predictions_csv(std::string_view contents, RowPolicy policy = RowPolicy::fail_fast,
                                    LoadReport* report = nullptr);
PredictionMap load_predictions_file(const std::filesystem::path& path,
                                    RowPolicy policy = RowPolicy::fail_fast,
                                    LoadReport* report = nullptr);

std::string format_prediction_row(const Prediction& p);
std::string to_predictions_csv(const PredictionMap& predictions);

// Minimal blocking HTTP client seam so the batching logic can be exercised
// without sockets.
struct HttpReply {
    int status = 0;  // 0 = transport failure
    std::string body;
};
using PostFn = std::function<HttpReply(const std::string& path, const std::string& json_body)>;

struct HttpOptions {
    std::size_t batch_size = 100;
    std::size_t max_in_flight = 4;
    int timeout_s = 30;
};

struct HttpResult {
    PredictionMap predictions;
    std::vector<std::string> missing;  // requested ids the service did not answer
};

// Talks to `<endpoint>/predict`. Endpoint form: http[s]://host[:port][/base].
class HttpPredictor {
public:
    explicit HttpPredictor(std::string endpoint, HttpOptions options = {});
    // Test seam: route requests through `post` instead of a real client.
    HttpPredictor(std::string endpoint, HttpOptions options, PostFn post);

    HttpResult predict(const std::vector<std::string>& image_ids) const;

    bool health() const;

private:
    std::string base_path_;
    HttpOptions options_;
    PostFn post_;
    std::function<HttpReply(const std::string&)> get_;
};

// Request/response bodies of the prediction wire protocol.
std::string encode_predict_request(const std::vector<std::string>& image_ids);
std::vector<Prediction> decode_predict_response(std::string_view body);
std::string encode_predict_response(const std::vector<Prediction>& predictions);

} // namespace classifier
} // namespace surfaceai
