#include "oaisim/timefmt.hpp"

#include <chrono>
#include <cstdio>

namespace oaisim {

namespace {

bool read_digits(std::string_view text, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > text.size()) return false;
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (text[i] < '0' || text[i] > '9') return false;
        value = value * 10 + (text[i] - '0');
    }
    out = value;
    return true;
}

}  // namespace

std::optional<UtcStamp> parse_utc(std::string_view text) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0;
    if (text.size() != 10 && text.size() != 20) return std::nullopt;
    if (!read_digits(text, 0, 4, y) || text[4] != '-' || !read_digits(text, 5, 2, mo) ||
        text[7] != '-' || !read_digits(text, 8, 2, d))
        return std::nullopt;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    std::int64_t secs = sys_days{ymd}.time_since_epoch().count() * std::int64_t{86400};
    if (text.size() == 10) return UtcStamp{secs, Granularity::day};

    int h = 0, mi = 0, s = 0;
    if (text[10] != 'T' || !read_digits(text, 11, 2, h) || text[13] != ':' ||
        !read_digits(text, 14, 2, mi) || text[16] != ':' || !read_digits(text, 17, 2, s) ||
        text[19] != 'Z')
        return std::nullopt;
    if (h > 23 || mi > 59 || s > 59) return std::nullopt;
    return UtcStamp{secs + h * 3600 + mi * 60 + s, Granularity::second};
}

std::string format_utc(std::int64_t seconds) {
    using namespace std::chrono;
    std::int64_t days_count = seconds >= 0 ? seconds / 86400 : (seconds - 86399) / 86400;
    const std::int64_t rem = seconds - days_count * 86400;
    const year_month_day ymd{sys_days{days{days_count}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::string format_utc_day(std::int64_t seconds) { return format_utc(seconds).substr(0, 10); }

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    return format_utc(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

}  // namespace oaisim
