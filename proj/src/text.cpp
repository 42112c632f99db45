#include "surfaceai/text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "surfaceai/errors.hpp"
#include "surfaceai/segment_id.hpp"

namespace surfaceai {

std::string SegmentId::str() const {
    auto s = std::to_string(way_id);
    if (part) s += "#" + std::to_string(*part);
    return s;
}

SegmentId SegmentId::parse(std::string_view text) {
    text = text::trim(text);
    SegmentId id;
    const auto hash = text.find('#');
    long long way = 0;
    if (!text::parse_int64(text.substr(0, hash), way))
        throw ParseError("invalid segment id '" + std::string(text) + "'");
    id.way_id = way;
    if (hash != std::string_view::npos) {
        long long part = 0;
        if (!text::parse_int64(text.substr(hash + 1), part) || part < 0)
            throw ParseError("invalid segment id part in '" + std::string(text) + "'");
        id.part = static_cast<std::uint32_t>(part);
    }
    return id;
}

} // namespace surfaceai

namespace surfaceai::text {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool parse_int64(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string csv_field(std::string_view s) {
    const bool needs = s.find_first_of(",\"\n") != std::string_view::npos ||
                       (!s.empty() && (s.front() == ' ' || s.back() == ' '));
    if (!needs) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("write failed for " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot write " + path.string());
    }
}

} // namespace surfaceai::text
