#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "surfaceai/errors.hpp"
#include "surfaceai/geo.hpp"

namespace surfaceai::imagery {

inline constexpr const char* kTokenEnvVar = "MAPILLARY_ACCESS_TOKEN";
inline constexpr const char* kApiOrigin = "https://graph.mapillary.com";

struct ImageRecord {
    std::string image_id;
    geo::GeoPoint position;
    std::int64_t captured_at = 0;  // ms since epoch
    std::string creator;
    std::optional<std::string> sequence_id;
    std::optional<double> camera_heading;  // degrees in [0, 360)

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

enum class Source { live_api, fixture };

struct FetchManifest {
    geo::BBox boundary;
    std::size_t fetched_count = 0;
    std::size_t pages = 0;
    std::size_t raw_records = 0;
    std::size_t duplicates = 0;
    std::size_t malformed = 0;
    std::size_t filtered_date = 0;
    std::size_t filtered_bbox = 0;
    std::size_t retries = 0;
    std::optional<std::int64_t> min_captured_at;
    std::optional<std::int64_t> max_captured_at;
    Source source = Source::fixture;
};

class FetchError : public Error {
public:
    FetchError(const std::string& what, FetchManifest partial)
        : Error(what), partial_(std::move(partial)) {}
    const FetchManifest& partial_manifest() const noexcept { return partial_; }

private:
    FetchManifest partial_;
};

class CredentialError : public Error {
public:
    using Error::Error;
};

class FixtureError : public FetchError {
public:
    using FetchError::FetchError;
};

// Time source for rate limiting and backoff; simulated in tests.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::milliseconds now() = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SteadyClock final : public Clock {
public:
    std::chrono::milliseconds now() override;
    void sleep_for(std::chrono::milliseconds d) override;
};

// Sleeping advances time instantly.
class SimulatedClock final : public Clock {
public:
    std::chrono::milliseconds now() override { return now_; }
    void sleep_for(std::chrono::milliseconds d) override { now_ += d; }
    void advance(std::chrono::milliseconds d) { now_ += d; }

private:
    std::chrono::milliseconds now_{0};
};

// At most `per_minute` acquisitions in any half-open 60 s window.
class RateLimiter {
public:
    RateLimiter(std::size_t per_minute, Clock& clock);

    // Blocks (via the clock) until a request slot is free.
    void acquire();

private:
    std::size_t budget_;
    Clock& clock_;
    std::deque<std::chrono::milliseconds> recent_;
};

struct HttpResponse {
    int status = 0;  // 0 = transport failure
    std::string body;
};

class PageTransport {
public:
    virtual ~PageTransport() = default;
    virtual HttpResponse get(const std::string& url) = 0;
    virtual Source source() const = 0;
};

// HTTPS against the Graph API with the token in the Authorization header.
class LiveTransport final : public PageTransport {
public:
    explicit LiveTransport(std::string token, int timeout_s = 60);
    HttpResponse get(const std::string& url) override;
    Source source() const override { return Source::live_api; }

private:
    std::string token_;
    int timeout_s_;
};

// Replays recorded pages. `dir/index.json` maps page cursors to files:
//   {"pages": {"initial": "page_0.json", "<after-cursor>": "page_1.json"}}
// The first request uses the "initial" key; later ones the `after` query
// parameter of the previous page's `paging.next` link.
class FixtureTransport final : public PageTransport {
public:
    explicit FixtureTransport(std::filesystem::path dir);
    HttpResponse get(const std::string& url) override;
    Source source() const override { return Source::fixture; }

    static std::string cursor_of(const std::string& url);

private:
    std::filesystem::path dir_;
    std::map<std::string, std::string> pages_;
};

struct RetryPolicy {
    std::size_t max_retries = 4;
    std::chrono::milliseconds base_delay{1000};
    std::chrono::milliseconds max_delay{30000};
};

struct FetchOptions {
    std::optional<std::int64_t> date_min;  // drop images captured before this
    std::optional<std::size_t> page_limit;
    std::size_t page_size = 2000;
    std::size_t requests_per_minute = 60;
    RetryPolicy retry;
    bool want_thumbnails = false;
};

struct FetchResult {
    std::vector<ImageRecord> records;  // sorted by image_id
    FetchManifest manifest;
    std::map<std::string, std::string> thumbnail_urls;  // only with want_thumbnails
};

std::string build_images_url(const geo::BBox& bbox, std::size_t limit, bool want_thumbnails);

// Follows `paging.next` until exhausted or page_limit, then dedups, filters
// by date and bbox, and sorts.
FetchResult fetch_with(PageTransport& transport, Clock& clock, const geo::BBox& bbox,
                       const FetchOptions& options);

using FetchFn = std::function<FetchResult(const geo::BBox&, const FetchOptions&)>;

// Live Graph API fetch. Throws CredentialError for an empty token or an
// authentication failure.
FetchResult fetch_images(const geo::BBox& bbox, const std::string& token,
                         const FetchOptions& options, Clock& clock);

// Token from the environment only.
std::string token_from_env();

FetchFn load_fixture_store(const std::filesystem::path& dir);

// Newline-delimited JSON, one ImageRecord per line.
std::string to_ndjson(const std::vector<ImageRecord>& records);
std::vector<ImageRecord> parse_ndjson(std::string_view contents);
std::vector<ImageRecord> load_records(const std::filesystem::path& path);

// Stores thumbnail bytes as <sha256>.jpg under `dir` and returns
// image_id -> file name. Records without a URL are skipped.
std::map<std::string, std::string> download_thumbnails(
    const std::map<std::string, std::string>& urls, PageTransport& transport,
    const std::filesystem::path& dir);

std::string sha256_hex(std::string_view bytes);

} // namespace surfaceai::imagery
