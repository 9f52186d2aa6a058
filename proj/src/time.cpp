#include "actmon/time.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>

namespace actmon {

std::int64_t days_from_civil(CivilDate d) {
    auto y = static_cast<std::int64_t>(d.year);
    const int m = d.month;
    const int day = d.day;
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(day) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t days) {
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const auto doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(day)};
}

std::int64_t day_index(Timestamp t) {
    std::int64_t d = t.micros / kMicrosPerDay;
    if (t.micros % kMicrosPerDay < 0) --d;
    return d;
}

CivilDate civil_date(Timestamp t) {
    return civil_from_days(day_index(t));
}

double seconds_since_midnight(Timestamp t) {
    const std::int64_t within = t.micros - day_index(t) * kMicrosPerDay;
    return static_cast<double>(within) / static_cast<double>(kMicrosPerSecond);
}

double seconds_between(Timestamp a, Timestamp b) {
    return static_cast<double>(b.micros - a.micros) / static_cast<double>(kMicrosPerSecond);
}

namespace {

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

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static constexpr std::array<int, 13> kDays = {0, 31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return kDays[static_cast<std::size_t>(m)];
}

}  // namespace

std::optional<CivilDate> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const auto ys = s.substr(0, 4), ms = s.substr(5, 2), ds = s.substr(8, 2);
    if (!all_digits(ys) || !all_digits(ms) || !all_digits(ds)) return std::nullopt;
    CivilDate d{to_int(ys), to_int(ms), to_int(ds)};
    if (d.month < 1 || d.month > 12) return std::nullopt;
    if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return std::nullopt;
    return d;
}

std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time) {
    const auto cd = parse_date(date);
    if (!cd) return std::nullopt;

    std::string_view frac;
    if (const auto dot = time.find('.'); dot != std::string_view::npos) {
        frac = time.substr(dot + 1);
        time = time.substr(0, dot);
        if (!all_digits(frac)) return std::nullopt;
    }
    if (time.size() != 8 || time[2] != ':' || time[5] != ':') return std::nullopt;
    const auto hs = time.substr(0, 2), ms = time.substr(3, 2), ss = time.substr(6, 2);
    if (!all_digits(hs) || !all_digits(ms) || !all_digits(ss)) return std::nullopt;
    const int h = to_int(hs), mi = to_int(ms), se = to_int(ss);
    if (h > 23 || mi > 59 || se > 59) return std::nullopt;

    std::int64_t micros = 0;
    if (!frac.empty()) {
        std::int64_t scale = 100'000;
        for (std::size_t i = 0; i < frac.size() && scale > 0; ++i, scale /= 10) {
            micros += (frac[i] - '0') * scale;
        }
    }
    const std::int64_t secs = (h * 3600 + mi * 60 + se);
    return Timestamp{days_from_civil(*cd) * kMicrosPerDay + secs * kMicrosPerSecond + micros};
}

std::string format_date(CivilDate d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

std::string format_timestamp(Timestamp t) {
    const std::int64_t day = day_index(t);
    const std::int64_t within = t.micros - day * kMicrosPerDay;
    const auto d = civil_from_days(day);
    const std::int64_t secs = within / kMicrosPerSecond;
    const std::int64_t micros = within % kMicrosPerSecond;
    char buf[40];
    int n = std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", d.year, d.month, d.day,
                          static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60),
                          static_cast<int>(secs % 60));
    if (micros != 0) {
        n += std::snprintf(buf + n, sizeof buf - static_cast<std::size_t>(n), ".%06d",
                           static_cast<int>(micros));
        while (buf[n - 1] == '0') buf[--n] = '\0';
    }
    return {buf, static_cast<std::size_t>(n)};
}

}  // namespace actmon
