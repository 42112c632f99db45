#include "surfaceai/classifier.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "surfaceai/errors.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai {

namespace {

bool is_conf(double c) { return std::isfinite(c) && c >= 0.0 && c <= 1.0; }

} // namespace

void validate(const Prediction& p) {
    if (p.image_id.empty()) throw ContractViolation("prediction with empty image_id");
    if (!is_conf(p.road_type_conf) || !is_conf(p.surface_type_conf))
        throw ContractViolation("prediction " + p.image_id + ": confidence outside [0, 1]");
}

namespace classifier {

namespace {

Prediction parse_row(const std::vector<std::string>& f, std::size_t row) {
    const auto where = "row " + std::to_string(row);
    if (f.size() != 6)
        throw ParseError("expected 6 fields, got " + std::to_string(f.size()), where);

    Prediction p;
    p.image_id = std::string(text::trim(f[0]));
    if (p.image_id.empty()) throw ParseError("empty image_id", where);

    const auto rt = parse_road_type(text::trim(f[1]));
    if (!rt) throw ParseError("unknown road_type '" + f[1] + "'", where);
    p.road_type = *rt;
    const auto st = parse_surface_type(text::trim(f[3]));
    if (!st) throw ParseError("unknown surface_type '" + f[3] + "'", where);
    p.surface_type = *st;

    auto number = [&](const std::string& tok, const char* name) {
        double v = 0.0;
        if (!text::parse_double(tok, v))
            throw ParseError(std::string("invalid ") + name + " '" + tok + "'", where);
        return v;
    };
    p.road_type_conf = number(f[2], "road_type_conf");
    p.surface_type_conf = number(f[4], "surface_type_conf");
    if (!is_conf(p.road_type_conf))
        throw ParseError("road_type_conf '" + f[2] + "' outside [0, 1]", where);
    if (!is_conf(p.surface_type_conf))
        throw ParseError("surface_type_conf '" + f[4] + "' outside [0, 1]", where);
    const double q = number(f[5], "quality");
    if (!std::isfinite(q) || q < QualityScore::kMin || q > QualityScore::kMax)
        throw ParseError("quality '" + f[5] + "' outside [1, 5]", where);
    p.quality = QualityScore(q);
    return p;
}

Prediction prediction_from_json(const nlohmann::json& j) {
    auto str = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string())
            throw ParseError(std::string("missing string field '") + key + "'");
        return j[key].get<std::string>();
    };
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number())
            throw ParseError(std::string("missing numeric field '") + key + "'");
        return j[key].get<double>();
    };
    Prediction p;
    p.image_id = j.contains("image_id") && j["image_id"].is_number_integer()
                     ? std::to_string(j["image_id"].get<long long>())
                     : str("image_id");
    const auto rt = parse_road_type(str("road_type"));
    if (!rt) throw ParseError("unknown road_type '" + str("road_type") + "'");
    const auto st = parse_surface_type(str("surface_type"));
    if (!st) throw ParseError("unknown surface_type '" + str("surface_type") + "'");
    p.road_type = *rt;
    p.surface_type = *st;
    p.road_type_conf = num("road_type_conf");
    p.surface_type_conf = num("surface_type_conf");
    const double q = num("quality");
    if (!std::isfinite(q) || q < QualityScore::kMin || q > QualityScore::kMax)
        throw ParseError("quality outside [1, 5] for image " + p.image_id);
    p.quality = QualityScore(q);
    try {
        validate(p);
    } catch (const ContractViolation& e) {
        throw ParseError(e.what());
    }
    return p;
}

} // namespace

PredictionMap parse_predictions_csv(std::string_view contents, RowPolicy policy,
                                    LoadReport* report) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    rep = {};

    PredictionMap out;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t pos = 0;
    while (pos <= contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        std::string_view line = contents.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        if (text::trim(line).empty()) continue;
        if (!header_seen) {
            if (text::trim(line) != kCsvHeader)
                throw ParseError("missing or unexpected header (want '" + std::string(kCsvHeader) +
                                     "')",
                                 "line " + std::to_string(line_no));
            header_seen = true;
            continue;
        }
        ++rep.rows;
        try {
            auto p = parse_row(text::split_csv_line(line), line_no);
            auto [it, inserted] = out.insert_or_assign(p.image_id, std::move(p));
            if (!inserted) ++rep.duplicates;
        } catch (const ParseError& e) {
            if (policy == RowPolicy::fail_fast) throw;
            ++rep.skipped;
            rep.skipped_reasons.emplace_back(e.what());
        }
    }
    if (!header_seen) throw ParseError("empty prediction file (header is mandatory)");
    return out;
}

PredictionMap load_predictions_file(const std::filesystem::path& path, RowPolicy policy,
                                    LoadReport* report) {
    std::string contents;
    try {
        contents = text::read_file(path);
    } catch (const Error&) {
        throw Error("cannot read prediction file " + path.string());
    }
    try {
        return parse_predictions_csv(contents, policy, report);
    } catch (const ParseError& e) {
        throw ParseError(e.what(), path.filename().string());
    }
}

std::string format_prediction_row(const Prediction& p) {
    std::string row = text::csv_field(p.image_id);
    row += ',';
    row += to_string(p.road_type);
    row += ',';
    row += text::format_double(p.road_type_conf);
    row += ',';
    row += to_string(p.surface_type);
    row += ',';
    row += text::format_double(p.surface_type_conf);
    row += ',';
    row += text::format_double(p.quality.value());
    return row;
}

std::string to_predictions_csv(const PredictionMap& predictions) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& [id, p] : predictions) {
        out += format_prediction_row(p);
        out += '\n';
    }
    return out;
}

std::string encode_predict_request(const std::vector<std::string>& image_ids) {
    return nlohmann::json{{"image_ids", image_ids}}.dump();
}

std::vector<Prediction> decode_predict_response(std::string_view body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), "byte " + std::to_string(e.byte));
    }
    if (!doc.is_object() || !doc.contains("predictions") || !doc["predictions"].is_array())
        throw ParseError("response lacks a 'predictions' array");
    std::vector<Prediction> out;
    out.reserve(doc["predictions"].size());
    std::size_t i = 0;
    for (const auto& item : doc["predictions"]) {
        try {
            if (!item.is_object()) throw ParseError("not an object");
            out.push_back(prediction_from_json(item));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), "predictions[" + std::to_string(i) + "]");
        }
        ++i;
    }
    return out;
}

std::string encode_predict_response(const std::vector<Prediction>& predictions) {
    auto arr = nlohmann::json::array();
    for (const auto& p : predictions)
        arr.push_back({{"image_id", p.image_id},
                       {"road_type", to_string(p.road_type)},
                       {"road_type_conf", p.road_type_conf},
                       {"surface_type", to_string(p.surface_type)},
                       {"surface_type_conf", p.surface_type_conf},
                       {"quality", p.quality.value()}});
    return nlohmann::json{{"predictions", std::move(arr)}}.dump();
}

} // namespace classifier
} // namespace surfaceai
