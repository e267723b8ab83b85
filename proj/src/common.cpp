#include "jumpscatter/common.hpp"

#include <charconv>
#include <cstdio>

namespace jumpscatter {

namespace {

int parse_fixed_int(std::string_view text, std::string_view what) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || text.empty())
        throw std::invalid_argument("malformed " + std::string(what) + " '" + std::string(text) + "'");
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw std::invalid_argument("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    const int y = parse_fixed_int(text.substr(0, 4), "year");
    const int m = parse_fixed_int(text.substr(5, 2), "month");
    const int d = parse_fixed_int(text.substr(8, 2), "day");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw std::invalid_argument("invalid calendar date '" + std::string(text) + "'");
    return Date{ymd};
}

std::chrono::minutes parse_time_of_day(std::string_view text) {
    text = trim(text);
    // Accept HH:MM and HH:MM:SS (seconds must be zero at minute precision).
    if (text.size() != 5 && text.size() != 8)
        throw std::invalid_argument("malformed time '" + std::string(text) + "' (expected HH:MM)");
    if (text[2] != ':' || (text.size() == 8 && text[5] != ':'))
        throw std::invalid_argument("malformed time '" + std::string(text) + "' (expected HH:MM)");
    const int h = parse_fixed_int(text.substr(0, 2), "hour");
    const int m = parse_fixed_int(text.substr(3, 2), "minute");
    if (text.size() == 8 && parse_fixed_int(text.substr(6, 2), "second") != 0)
        throw std::invalid_argument("time '" + std::string(text) + "' is not on a minute boundary");
    if (h < 0 || h > 23 || m < 0 || m > 59) throw std::invalid_argument("time out of range '" + std::string(text) + "'");
    return std::chrono::hours{h} + std::chrono::minutes{m};
}

std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_time_of_day(std::chrono::minutes m) {
    char buf[8];
    const auto total = m.count();
    std::snprintf(buf, sizeof buf, "%02d:%02d", static_cast<int>(total / 60), static_cast<int>(total % 60));
    return buf;
}

std::string format_minute(Minute m) { return format_date(date_of(m)) + " " + format_time_of_day(time_of_day(m)); }

}  // namespace jumpscatter
