#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace surfaceai {

// Identifier of a road segment: the OSM way id, plus a part number when the
// way came from a MultiLineString and was split into several segments.
// Textual form is "<way>" or "<way>#<part>".
struct SegmentId {
    std::int64_t way_id = 0;
    std::optional<std::uint32_t> part;

    std::string str() const;
    static SegmentId parse(std::string_view text);

    friend bool operator==(const SegmentId&, const SegmentId&) = default;
    friend auto operator<=>(const SegmentId&, const SegmentId&) = default;
};

} // namespace surfaceai
