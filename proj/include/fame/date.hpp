#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "fame/error.hpp"

namespace fame {

/// Proleptic Gregorian calendar date.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    friend constexpr auto operator<=>(const Date&, const Date&) = default;
};

constexpr bool is_leap_year(int y) noexcept {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

constexpr int days_in_month(int y, int m) noexcept {
    constexpr int table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return (m == 2 && is_leap_year(y)) ? 29 : table[m - 1];
}

constexpr bool is_valid(const Date& d) noexcept {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
           d.day <= days_in_month(d.year, d.month);
}

/// Days since 1970-01-01 (Howard Hinnant's days_from_civil).
constexpr std::int64_t to_days(const Date& d) noexcept {
    const int y = d.year - (d.month <= 2 ? 1 : 0);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned mp = static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9));
    const unsigned doy = (153 * mp + 2) / 5 + static_cast<unsigned>(d.day) - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr Date from_days(std::int64_t z) noexcept {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Date{static_cast<int>(y + (m <= 2 ? 1 : 0)), static_cast<int>(m), static_cast<int>(d)};
}

inline Date add_days(const Date& d, std::int64_t n) noexcept { return from_days(to_days(d) + n); }

namespace detail {
inline int parse_date_field(std::string_view s, std::string_view whole) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw InputError("malformed date '" + std::string(whole) + "'");
    return v;
}
}  // namespace detail

/// Parses YYYY-MM-DD.
inline Date parse_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw InputError("malformed ISO date '" + std::string(s) + "' (expected YYYY-MM-DD)");
    Date d{detail::parse_date_field(s.substr(0, 4), s), detail::parse_date_field(s.substr(5, 2), s),
           detail::parse_date_field(s.substr(8, 2), s)};
    if (!is_valid(d)) throw InputError("invalid calendar date '" + std::string(s) + "'");
    return d;
}

/// Parses the M/D/YYYY form used by the published fixture table.
inline Date parse_us_date(std::string_view s) {
    const auto a = s.find('/');
    const auto b = s.find('/', a == std::string_view::npos ? a : a + 1);
    if (a == std::string_view::npos || b == std::string_view::npos)
        throw InputError("malformed M/D/YYYY date '" + std::string(s) + "'");
    Date d{detail::parse_date_field(s.substr(b + 1), s), detail::parse_date_field(s.substr(0, a), s),
           detail::parse_date_field(s.substr(a + 1, b - a - 1), s)};
    if (!is_valid(d)) throw InputError("invalid calendar date '" + std::string(s) + "'");
    return d;
}

inline std::string to_iso(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

/// YYYYMMDD, as used in REST paths.
inline std::string to_compact(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d%02d%02d", d.year, d.month, d.day);
    return buf;
}

/// Inclusive date interval.
struct DateRange {
    Date first;
    Date last;

    std::int64_t days() const noexcept { return to_days(last) - to_days(first) + 1; }
    friend bool operator==(const DateRange&, const DateRange&) = default;
};

}  // namespace fame
