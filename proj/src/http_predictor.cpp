#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "surfaceai/classifier.hpp"
#include "surfaceai/errors.hpp"

namespace surfaceai::classifier {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string base;    // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ContractViolation("endpoint needs a scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https")
        throw ContractViolation("unsupported endpoint scheme: " + scheme);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_start);
    if (path_start != std::string::npos) ep.base = url.substr(path_start);
    while (!ep.base.empty() && ep.base.back() == '/') ep.base.pop_back();
    return ep;
}

} // namespace

HttpPredictor::HttpPredictor(std::string endpoint, HttpOptions options)
    : options_(options) {
    const auto ep = split_endpoint(endpoint);
    base_path_ = ep.base;
    const int timeout = options.timeout_s;
    post_ = [origin = ep.origin, timeout](const std::string& path, const std::string& body) {
        httplib::Client cli(origin);
        cli.set_connection_timeout(timeout, 0);
        cli.set_read_timeout(timeout, 0);
        auto res = cli.Post(path, body, "application/json");
        if (!res) return HttpReply{0, httplib::to_string(res.error())};
        return HttpReply{res->status, res->body};
    };
    get_ = [origin = ep.origin, timeout](const std::string& path) {
        httplib::Client cli(origin);
        cli.set_connection_timeout(timeout, 0);
        auto res = cli.Get(path);
        if (!res) return HttpReply{0, httplib::to_string(res.error())};
        return HttpReply{res->status, res->body};
    };
}

HttpPredictor::HttpPredictor(std::string endpoint, HttpOptions options, PostFn post)
    : base_path_(split_endpoint(endpoint).base), options_(options), post_(std::move(post)) {}

bool HttpPredictor::health() const {
    if (!get_) return true;
    return get_(base_path_ + "/health").status == 200;
}

HttpResult HttpPredictor::predict(const std::vector<std::string>& image_ids) const {
    if (options_.batch_size == 0) throw ContractViolation("batch size must be positive");
    const std::set<std::string> wanted(image_ids.begin(), image_ids.end());
    const std::vector<std::string> ids(wanted.begin(), wanted.end());

    std::vector<std::vector<std::string>> batches;
    for (std::size_t i = 0; i < ids.size(); i += options_.batch_size)
        batches.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(i),
                             ids.begin() + static_cast<std::ptrdiff_t>(
                                               std::min(ids.size(), i + options_.batch_size)));

    std::vector<std::vector<Prediction>> answers(batches.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    const std::string path = base_path_ + "/predict";

    auto worker = [&] {
        for (std::size_t b; (b = next.fetch_add(1)) < batches.size();) {
            try {
                const auto reply = post_(path, encode_predict_request(batches[b]));
                if (reply.status == 0)
                    throw BackendError("prediction endpoint unreachable: " + reply.body);
                if (reply.status != 200)
                    throw BackendError("prediction endpoint returned HTTP " +
                                       std::to_string(reply.status) + ": " + reply.body);
                answers[b] = decode_predict_response(reply.body);
            } catch (const ParseError& e) {
                std::lock_guard lock(failure_mu);
                if (!failure)
                    failure = std::make_exception_ptr(
                        BackendError(std::string("malformed prediction response: ") + e.what()));
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const auto n_threads = std::min(std::max<std::size_t>(options_.max_in_flight, 1), batches.size());
    if (batches.size() <= 1 || n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    HttpResult result;
    for (auto& batch : answers)
        for (auto& p : batch)
            if (wanted.count(p.image_id)) result.predictions.insert_or_assign(p.image_id, std::move(p));
    for (const auto& id : ids)
        if (!result.predictions.count(id)) result.missing.push_back(id);
    return result;
}

} // namespace surfaceai::classifier
