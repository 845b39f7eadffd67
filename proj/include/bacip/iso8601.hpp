#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bacip {

// Accepts "YYYY-MM-DD" and "YYYY-MM-DDTHH:MM:SSZ"; date-only values mean
// midnight UTC. Returns seconds since the Unix epoch.
std::optional<int64_t> parse_iso8601(std::string_view text);

std::string format_iso8601(int64_t epochSeconds);       // full timestamp, Z suffix
std::string format_iso8601_date(int64_t epochSeconds);  // date part only

}  // namespace bacip
