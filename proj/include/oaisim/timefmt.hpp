#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace oaisim {

enum class Granularity { day, second };

struct UtcStamp {
    std::int64_t seconds = 0;  // since 1970-01-01T00:00:00Z
    Granularity granularity = Granularity::second;
};

/// Accepts "YYYY-MM-DD" or "YYYY-MM-DDThh:mm:ssZ"; anything else is nullopt.
std::optional<UtcStamp> parse_utc(std::string_view text);

std::string format_utc(std::int64_t seconds);
std::string format_utc_day(std::int64_t seconds);
std::string utc_now();

}  // namespace oaisim
