#include "bacip/iso8601.hpp"

#include <cstdio>

namespace bacip {

namespace {

// Days from civil date, epoch 1970-01-01 (Howard Hinnant's algorithm).
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

bool is_leap(int64_t y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

unsigned days_in_month(int64_t y, unsigned m) {
    static const unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

}  // namespace

std::optional<int64_t> parse_iso8601(std::string_view text) {
    // Date part: YYYY-MM-DD
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    std::string_view ys = text.substr(0, 4), ms = text.substr(5, 2), ds = text.substr(8, 2);
    if (!all_digits(ys) || !all_digits(ms) || !all_digits(ds)) return std::nullopt;
    int year = to_int(ys), month = to_int(ms), day = to_int(ds);
    if (month < 1 || month > 12) return std::nullopt;
    if (day < 1 || static_cast<unsigned>(day) > days_in_month(year, month)) return std::nullopt;

    int hour = 0, minute = 0, second = 0;
    if (text.size() > 10) {
        // Time part: THH:MM:SS followed by 'Z' (UTC only).
        if (text.size() != 20 || text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
            text[19] != 'Z') {
            return std::nullopt;
        }
        std::string_view hs = text.substr(11, 2), mins = text.substr(14, 2),
                         ss = text.substr(17, 2);
        if (!all_digits(hs) || !all_digits(mins) || !all_digits(ss)) return std::nullopt;
        hour = to_int(hs);
        minute = to_int(mins);
        second = to_int(ss);
        if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    }

    int64_t days = days_from_civil(year, month, day);
    return days * 86400 + hour * 3600 + minute * 60 + second;
}

std::string format_iso8601(int64_t epochSeconds) {
    int64_t days = epochSeconds / 86400;
    int64_t rem = epochSeconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(y), m, d, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
    return buf;
}

std::string format_iso8601_date(int64_t epochSeconds) {
    return format_iso8601(epochSeconds).substr(0, 10);
}

}  // namespace bacip
