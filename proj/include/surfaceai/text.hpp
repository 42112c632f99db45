#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace surfaceai::text {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Strict full-string number parsing; empty optional-like failure is reported
// by returning false.
bool parse_double(std::string_view s, double& out);
bool parse_int64(std::string_view s, long long& out);

std::string_view trim(std::string_view s);

// Splits one CSV line on commas. Fields may be double-quoted ("" escapes a
// quote). No embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a CSV field only when it contains a comma, quote or leading/trailing
// whitespace.
std::string csv_field(std::string_view s);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place, so readers never
// observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace surfaceai::text
