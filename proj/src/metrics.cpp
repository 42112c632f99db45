#include "surfaceai/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <nlohmann/json.hpp>

#include "surfaceai/errors.hpp"
#include "surfaceai/text.hpp"

namespace surfaceai::metrics {

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw ContractViolation("correlation undefined for constant input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

} // namespace

ClassificationMetrics classification_metrics(
    const std::vector<std::pair<std::string, std::string>>& predicted_true) {
    if (predicted_true.empty()) throw ContractViolation("classification metrics need at least one pair");
    std::map<std::string, std::size_t> tp, pred_count, true_count;
    std::size_t correct = 0;
    for (const auto& [p, t] : predicted_true) {
        ++pred_count[p];
        ++true_count[t];
        if (p == t) {
            ++tp[p];
            ++correct;
        }
    }
    std::set<std::string> labels;
    for (const auto& [k, v] : pred_count) labels.insert(k);
    for (const auto& [k, v] : true_count) labels.insert(k);

    ClassificationMetrics m;
    const double n = static_cast<double>(predicted_true.size());
    m.accuracy = static_cast<double>(correct) / n;
    double weighted = 0.0, macro = 0.0;
    for (const auto& label : labels) {
        const double hits = static_cast<double>(tp[label]);
        const double pc = static_cast<double>(pred_count[label]);
        const double tc = static_cast<double>(true_count[label]);
        const double precision = pc > 0 ? hits / pc : 0.0;
        const double recall = tc > 0 ? hits / tc : 0.0;
        const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        m.per_class_f1[label] = f1;
        weighted += tc * f1;
        macro += f1;
    }
    m.weighted_f1 = weighted / n;
    m.macro_f1 = macro / static_cast<double>(labels.size());
    return m;
}

double spearman_rho(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw ContractViolation("spearman inputs differ in length");
    if (xs.size() < 2) throw ContractViolation("spearman needs at least two points");
    return pearson(average_ranks(xs), average_ranks(ys));
}

double one_off_accuracy(const std::vector<std::pair<int, int>>& predicted_true) {
    if (predicted_true.empty()) throw ContractViolation("one-off accuracy needs at least one pair");
    std::size_t hits = 0;
    for (const auto& [p, t] : predicted_true) {
        if (p < 1 || p > 5 || t < 1 || t > 5) throw ContractViolation("quality classes are coded 1..5");
        if (std::abs(p - t) <= 1) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predicted_true.size());
}

double coverage(const std::vector<aggregation::SegmentAggregate>& aggregates) {
    if (aggregates.empty()) throw ContractViolation("coverage of an empty network is undefined");
    const auto ok = std::count_if(aggregates.begin(), aggregates.end(), [](const auto& a) {
        return a.status == aggregation::Status::ok;
    });
    return static_cast<double>(ok) / static_cast<double>(aggregates.size());
}

std::vector<LabeledSample> parse_truth_csv(std::string_view contents) {
    std::vector<LabeledSample> out;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    while (pos < contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        const auto line = contents.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto where = "line " + std::to_string(line_no);
        if (!header) {
            if (text::trim(line) != "segment_id,true_surface_type,true_quality_class")
                throw ParseError("unexpected truth header", where);
            header = true;
            continue;
        }
        const auto f = text::split_csv_line(line);
        if (f.size() != 3) throw ParseError("expected 3 fields", where);
        LabeledSample s;
        s.segment_id = SegmentId::parse(f[0]);
        if (const auto t = text::trim(f[1]); !t.empty()) {
            s.true_surface_type = parse_surface_type(t);
            if (!s.true_surface_type) throw ParseError("unknown surface type '" + f[1] + "'", where);
        }
        if (const auto q = text::trim(f[2]); !q.empty()) {
            s.true_quality_class = parse_quality_class(q);
            if (!s.true_quality_class) throw ParseError("unknown quality class '" + f[2] + "'", where);
        }
        if (!s.true_surface_type && !s.true_quality_class)
            throw ParseError("row carries no truth value", where);
        out.push_back(s);
    }
    if (!header) throw ParseError("empty truth file");
    return out;
}

std::vector<LabeledSample> load_truth_file(const std::filesystem::path& path) {
    try {
        return parse_truth_csv(text::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(e.what(), path.filename().string());
    }
}

std::string to_truth_csv(const std::vector<LabeledSample>& samples) {
    std::string out = "segment_id,true_surface_type,true_quality_class\n";
    for (const auto& s : samples) {
        out += s.segment_id.str();
        out += ',';
        if (s.true_surface_type) out += to_string(*s.true_surface_type);
        out += ',';
        if (s.true_quality_class) out += to_string(*s.true_quality_class);
        out += '\n';
    }
    return out;
}

EvalReport evaluate(const std::vector<aggregation::SegmentAggregate>& aggregates,
                    const std::vector<LabeledSample>& truth) {
    EvalReport r;
    r.n = truth.size();
    if (!aggregates.empty()) r.coverage = coverage(aggregates);

    std::map<SegmentId, const aggregation::SegmentAggregate*> by_id;
    for (const auto& a : aggregates) by_id.emplace(a.segment_id, &a);

    std::vector<std::pair<std::string, std::string>> type_pairs;
    std::vector<std::pair<int, int>> quality_pairs;
    std::vector<double> q_pred, q_true;
    for (const auto& s : truth) {
        const auto it = by_id.find(s.segment_id);
        const aggregation::SegmentAggregate* a = it == by_id.end() ? nullptr : it->second;
        if (!a) ++r.unknown_segments;
        if (s.true_surface_type) {
            if (a && a->surface_type)
                type_pairs.emplace_back(std::string(to_string(*a->surface_type)),
                                        std::string(to_string(*s.true_surface_type)));
            else
                ++r.excluded_type;
        }
        if (s.true_quality_class) {
            if (a && a->quality_mean && a->quality_class) {
                quality_pairs.emplace_back(quality_code(*a->quality_class),
                                           quality_code(*s.true_quality_class));
                q_pred.push_back(*a->quality_mean);
                q_true.push_back(quality_code(*s.true_quality_class));
            } else {
                ++r.excluded_quality;
            }
        }
    }
    r.n_type_pairs = type_pairs.size();
    r.n_quality_pairs = quality_pairs.size();
    if (!type_pairs.empty()) {
        const auto m = classification_metrics(type_pairs);
        r.type_accuracy = m.accuracy;
        r.per_class_f1 = m.per_class_f1;
        r.weighted_f1 = m.weighted_f1;
        r.macro_f1 = m.macro_f1;
    }
    if (!quality_pairs.empty()) {
        const auto hits = std::count_if(quality_pairs.begin(), quality_pairs.end(),
                                        [](const auto& p) { return p.first == p.second; });
        r.quality_accuracy = static_cast<double>(hits) / static_cast<double>(quality_pairs.size());
        r.one_off_accuracy = one_off_accuracy(quality_pairs);
        try {
            r.spearman = spearman_rho(q_pred, q_true);
        } catch (const ContractViolation&) {
            // constant side or single pair: correlation stays undefined
        }
    }
    return r;
}

std::string to_json(const EvalReport& r) {
    nlohmann::json j = {{"n", r.n},
                        {"n_type_pairs", r.n_type_pairs},
                        {"n_quality_pairs", r.n_quality_pairs},
                        {"excluded_type", r.excluded_type},
                        {"excluded_quality", r.excluded_quality},
                        {"unknown_segments", r.unknown_segments},
                        {"type_accuracy", opt(r.type_accuracy)},
                        {"per_class_f1", r.per_class_f1},
                        {"weighted_f1", opt(r.weighted_f1)},
                        {"macro_f1", opt(r.macro_f1)},
                        {"quality_accuracy", opt(r.quality_accuracy)},
                        {"one_off_accuracy", opt(r.one_off_accuracy)},
                        {"spearman", opt(r.spearman)},
                        {"coverage", opt(r.coverage)}};
    return j.dump(2) + "\n";
}

std::string to_text(const EvalReport& r) {
    std::ostringstream os;
    auto line = [&](const char* name, const std::optional<double>& v) {
        os << "  " << name << ": ";
        if (v)
            os << text::format_double(std::round(*v * 1e4) / 1e4);
        else
            os << "n/a";
        os << '\n';
    };
    os << "evaluated " << r.n << " labeled segments (" << r.n_type_pairs << " type pairs, "
       << r.n_quality_pairs << " quality pairs; excluded " << r.excluded_type << " type, "
       << r.excluded_quality << " quality)\n";
    os << "surface type\n";
    line("accuracy", r.type_accuracy);
    line("weighted F1", r.weighted_f1);
    line("macro F1", r.macro_f1);
    for (const auto& [label, f1] : r.per_class_f1) line(("F1 " + label).c_str(), f1);
    os << "surface quality\n";
    line("accuracy", r.quality_accuracy);
    line("1-off accuracy", r.one_off_accuracy);
    line("spearman", r.spearman);
    os << "network\n";
    line("coverage", r.coverage);
    return os.str();
}

} // namespace surfaceai::metrics
