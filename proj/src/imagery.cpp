#include "surfaceai/imagery.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <thread>
#include <nlohmann/json.hpp>

#include "surfaceai/text.hpp"

namespace surfaceai::imagery {

using nlohmann::json;
using std::chrono::milliseconds;

namespace {

constexpr const char* kFields = "id,computed_geometry,geometry,captured_at,creator,sequence,compass_angle";

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto path_start =
        url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::optional<geo::GeoPoint> point_of(const json& geometry) {
    if (!geometry.is_object() || geometry.value("type", "") != "Point") return std::nullopt;
    const auto& c = geometry.contains("coordinates") ? geometry["coordinates"] : json();
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) return std::nullopt;
    const geo::GeoPoint p{c[0].get<double>(), c[1].get<double>()};
    if (!geo::is_valid(p)) return std::nullopt;
    return p;
}

// Prefers the SfM-corrected position over the raw device geotag.
std::optional<ImageRecord> record_from_api(const json& item) {
    if (!item.is_object()) return std::nullopt;
    ImageRecord r;
    if (item.contains("id") && item["id"].is_string())
        r.image_id = item["id"].get<std::string>();
    else if (item.contains("id") && item["id"].is_number_integer())
        r.image_id = std::to_string(item["id"].get<long long>());
    if (r.image_id.empty()) return std::nullopt;

    std::optional<geo::GeoPoint> pos;
    if (item.contains("computed_geometry")) pos = point_of(item["computed_geometry"]);
    if (!pos && item.contains("geometry")) pos = point_of(item["geometry"]);
    if (!pos) return std::nullopt;
    r.position = *pos;

    if (!item.contains("captured_at") || !item["captured_at"].is_number()) return std::nullopt;
    r.captured_at = item["captured_at"].is_number_integer()
                        ? item["captured_at"].get<std::int64_t>()
                        : static_cast<std::int64_t>(item["captured_at"].get<double>());

    if (item.contains("creator")) {
        const auto& c = item["creator"];
        if (c.is_string())
            r.creator = c.get<std::string>();
        else if (c.is_object() && c.contains("username") && c["username"].is_string())
            r.creator = c["username"].get<std::string>();
        else if (c.is_object() && c.contains("id"))
            r.creator = c["id"].is_string() ? c["id"].get<std::string>() : c["id"].dump();
    }
    if (item.contains("sequence")) {
        const auto& s = item["sequence"];
        if (s.is_string())
            r.sequence_id = s.get<std::string>();
        else if (s.is_object() && s.contains("id") && s["id"].is_string())
            r.sequence_id = s["id"].get<std::string>();
    }
    if (item.contains("compass_angle") && item["compass_angle"].is_number()) {
        const double h = std::fmod(item["compass_angle"].get<double>(), 360.0);
        if (std::isfinite(h)) r.camera_heading = h < 0.0 ? h + 360.0 : h;
        if (r.camera_heading && *r.camera_heading >= 360.0) r.camera_heading = 0.0;
    }
    return r;
}

json record_to_json(const ImageRecord& r) {
    return {{"image_id", r.image_id},
            {"position", {{"lon", r.position.lon}, {"lat", r.position.lat}}},
            {"captured_at", r.captured_at},
            {"creator", r.creator},
            {"sequence_id", r.sequence_id ? json(*r.sequence_id) : json()},
            {"camera_heading", r.camera_heading ? json(*r.camera_heading) : json()}};
}

ImageRecord record_from_json(const json& j, const std::string& where) {
    try {
        ImageRecord r;
        r.image_id = j.at("image_id").get<std::string>();
        if (r.image_id.empty()) throw ParseError("empty image_id", where);
        r.position = {j.at("position").at("lon").get<double>(), j.at("position").at("lat").get<double>()};
        if (!geo::is_valid(r.position)) throw ParseError("position out of range", where);
        r.captured_at = j.at("captured_at").get<std::int64_t>();
        r.creator = j.at("creator").get<std::string>();
        if (j.contains("sequence_id") && !j["sequence_id"].is_null())
            r.sequence_id = j["sequence_id"].get<std::string>();
        if (j.contains("camera_heading") && !j["camera_heading"].is_null())
            r.camera_heading = j["camera_heading"].get<double>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(e.what(), where);
    }
}

bool is_transient(int status) { return status == 0 || status == 429 || status >= 500; }

} // namespace

milliseconds SteadyClock::now() {
    return std::chrono::duration_cast<milliseconds>(
        std::chrono::steady_clock::now().time_since_epoch());
}

void SteadyClock::sleep_for(milliseconds d) { std::this_thread::sleep_for(d); }

RateLimiter::RateLimiter(std::size_t per_minute, Clock& clock) : budget_(per_minute), clock_(clock) {
    if (per_minute == 0) throw ContractViolation("rate limit budget must be positive");
}

void RateLimiter::acquire() {
    constexpr milliseconds window{60'000};
    for (;;) {
        const auto now = clock_.now();
        while (!recent_.empty() && now - recent_.front() >= window) recent_.pop_front();
        if (recent_.size() < budget_) {
            recent_.push_back(now);
            return;
        }
        clock_.sleep_for(recent_.front() + window - now);
    }
}

LiveTransport::LiveTransport(std::string token, int timeout_s)
    : token_(std::move(token)), timeout_s_(timeout_s) {}

HttpResponse LiveTransport::get(const std::string& url) {
    const auto [origin, path] = split_url(url);
    httplib::Client cli(origin);
    cli.set_connection_timeout(timeout_s_, 0);
    cli.set_read_timeout(timeout_s_, 0);
    cli.set_follow_location(true);
    httplib::Headers headers;
    // never send the token to CDN hosts
    if (origin == kApiOrigin) headers.emplace("Authorization", "OAuth " + token_);
    auto res = cli.Get(path, headers);
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
}

FixtureTransport::FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {
    const auto index = dir_ / "index.json";
    std::error_code ec;
    if (!std::filesystem::is_regular_file(index, ec))
        throw FixtureError("fixture store " + dir_.string() + " has no index.json", {});
    try {
        const auto j = json::parse(text::read_file(index));
        for (const auto& [cursor, file] : j.at("pages").items())
            pages_.emplace(cursor, file.get<std::string>());
    } catch (const json::exception& e) {
        throw FixtureError("bad fixture index " + index.string() + ": " + e.what(), {});
    }
    if (pages_.empty()) throw FixtureError("fixture store " + dir_.string() + " is empty", {});
}

std::string FixtureTransport::cursor_of(const std::string& url) {
    const auto q = url.find('?');
    if (q == std::string::npos) return "initial";
    std::string_view query(url);
    query.remove_prefix(q + 1);
    while (!query.empty()) {
        const auto amp = query.find('&');
        const auto kv = query.substr(0, amp);
        if (kv.starts_with("after=")) return httplib::detail::decode_url(std::string(kv.substr(6)), true);
        if (amp == std::string_view::npos) break;
        query.remove_prefix(amp + 1);
    }
    return "initial";
}

HttpResponse FixtureTransport::get(const std::string& url) {
    const auto cursor = cursor_of(url);
    const auto it = pages_.find(cursor);
    if (it == pages_.end())
        throw FixtureError("no recorded page for cursor '" + cursor + "' in " + dir_.string(), {});
    try {
        return {200, text::read_file(dir_ / it->second)};
    } catch (const Error&) {
        throw FixtureError("recorded page " + it->second + " missing in " + dir_.string(), {});
    }
}

std::string build_images_url(const geo::BBox& bbox, std::size_t limit, bool want_thumbnails) {
    std::string fields = kFields;
    if (want_thumbnails) fields += ",thumb_1024_url";
    return std::string(kApiOrigin) + "/images?bbox=" + text::format_double(bbox.min_lon) + "," +
           text::format_double(bbox.min_lat) + "," + text::format_double(bbox.max_lon) + "," +
           text::format_double(bbox.max_lat) + "&fields=" + fields +
           "&limit=" + std::to_string(limit);
}

FetchResult fetch_with(PageTransport& transport, Clock& clock, const geo::BBox& bbox,
                       const FetchOptions& options) {
    FetchManifest manifest;
    manifest.boundary = bbox;
    manifest.source = transport.source();
    RateLimiter limiter(options.requests_per_minute, clock);

    std::map<std::string, ImageRecord> unique;
    std::map<std::string, std::string> thumbs;
    std::string url = build_images_url(bbox, options.page_size, options.want_thumbnails);

    while (!url.empty()) {
        if (options.page_limit && manifest.pages >= *options.page_limit) break;

        HttpResponse res;
        for (std::size_t attempt = 0;; ++attempt) {
            limiter.acquire();
            try {
                res = transport.get(url);
            } catch (FixtureError& e) {
                throw FixtureError(e.what(), manifest);
            }
            if (res.status == 401 || res.status == 403)
                throw CredentialError("image API rejected the access token (HTTP " +
                                      std::to_string(res.status) + ")");
            if (!is_transient(res.status) || attempt >= options.retry.max_retries) break;
            ++manifest.retries;
            const auto shift = std::min<std::size_t>(attempt, 20);
            clock.sleep_for(std::min<milliseconds>(options.retry.base_delay * (1LL << shift), options.retry.max_delay));
        }
        if (res.status != 200)
            throw FetchError("image API request failed with " +
                                 (res.status == 0 ? std::string("transport error: ") + res.body
                                                  : "HTTP " + std::to_string(res.status)) +
                                 " after " + std::to_string(manifest.retries) + " retries",
                             manifest);

        json doc;
        try {
            doc = json::parse(res.body);
        } catch (const json::parse_error& e) {
            throw FetchError(std::string("unparseable API page: ") + e.what(), manifest);
        }
        ++manifest.pages;
        const auto& data = doc.contains("data") && doc["data"].is_array() ? doc["data"] : json::array();
        for (const auto& item : data) {
            ++manifest.raw_records;
            auto rec = record_from_api(item);
            if (!rec) {
                ++manifest.malformed;
                continue;
            }
            if (unique.count(rec->image_id)) {
                ++manifest.duplicates;
                continue;
            }
            if (options.want_thumbnails && item.contains("thumb_1024_url") &&
                item["thumb_1024_url"].is_string())
                thumbs.emplace(rec->image_id, item["thumb_1024_url"].get<std::string>());
            unique.emplace(rec->image_id, std::move(*rec));
        }
        url.clear();
        if (doc.contains("paging") && doc["paging"].is_object() && doc["paging"].contains("next") &&
            doc["paging"]["next"].is_string())
            url = doc["paging"]["next"].get<std::string>();
    }

    FetchResult result;
    for (auto& [id, rec] : unique) {
        if (options.date_min && rec.captured_at < *options.date_min) {
            ++manifest.filtered_date;
            continue;
        }
        if (!bbox.contains(rec.position)) {
            ++manifest.filtered_bbox;
            continue;
        }
        manifest.min_captured_at = std::min(manifest.min_captured_at.value_or(rec.captured_at), rec.captured_at);
        manifest.max_captured_at = std::max(manifest.max_captured_at.value_or(rec.captured_at), rec.captured_at);
        if (auto t = thumbs.find(id); t != thumbs.end()) result.thumbnail_urls.insert(*t);
        result.records.push_back(std::move(rec));
    }
    manifest.fetched_count = result.records.size();
    result.manifest = manifest;
    return result;
}

FetchResult fetch_images(const geo::BBox& bbox, const std::string& token,
                         const FetchOptions& options, Clock& clock) {
    if (token.empty())
        throw CredentialError(std::string("live fetch needs an access token in ") + kTokenEnvVar);
    LiveTransport transport(token);
    return fetch_with(transport, clock, bbox, options);
}

std::string token_from_env() {
    const char* t = std::getenv(kTokenEnvVar);
    return t ? std::string(t) : std::string();
}

FetchFn load_fixture_store(const std::filesystem::path& dir) {
    auto transport = std::make_shared<FixtureTransport>(dir);
    return [transport](const geo::BBox& bbox, const FetchOptions& options) {
        SimulatedClock clock;  // replay never waits on wall time
        return fetch_with(*transport, clock, bbox, options);
    };
}

std::string to_ndjson(const std::vector<ImageRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<ImageRecord> parse_ndjson(std::string_view contents) {
    std::vector<ImageRecord> out;
    std::set<std::string> seen;
    std::size_t line_no = 0, pos = 0;
    while (pos < contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        const auto line = text::trim(contents.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(e.what(), where);
        }
        auto rec = record_from_json(j, where);
        if (!seen.insert(rec.image_id).second)
            throw ParseError("duplicate image_id " + rec.image_id, where);
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.image_id < b.image_id; });
    return out;
}

std::vector<ImageRecord> load_records(const std::filesystem::path& path) {
    try {
        return parse_ndjson(text::read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(e.what(), path.filename().string());
    }
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::map<std::string, std::string> download_thumbnails(
    const std::map<std::string, std::string>& urls, PageTransport& transport,
    const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::map<std::string, std::string> out;
    for (const auto& [id, url] : urls) {
        const auto res = transport.get(url);
        if (res.status != 200) continue;
        const auto name = sha256_hex(res.body) + ".jpg";
        const auto path = dir / name;
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) text::write_file_atomic(path, res.body);
        out.emplace(id, name);
    }
    return out;
}

} // namespace surfaceai::imagery
