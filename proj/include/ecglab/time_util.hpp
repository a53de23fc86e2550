#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ecglab {

// Absolute timestamps are int64 microseconds since the Unix epoch, UTC.
using TimeMicros = std::int64_t;

constexpr std::int64_t kMicrosPerSecond = 1'000'000;

// Accepts "YYYY-MM-DDTHH:MM:SS", optionally with ".f" to ".ffffff" fractional
// digits and an optional trailing "Z". Anything else is a DataError.
TimeMicros parse_iso8601_micros(std::string_view s);

// Emits "YYYY-MM-DDTHH:MM:SS.ffffffZ".
std::string format_iso8601_micros(TimeMicros t);

} // namespace ecglab
