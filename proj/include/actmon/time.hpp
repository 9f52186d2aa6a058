#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace actmon {

inline constexpr std::int64_t kMicrosPerSecond = 1'000'000;
inline constexpr std::int64_t kSecondsPerDay = 86'400;
inline constexpr std::int64_t kMicrosPerDay = kSecondsPerDay * kMicrosPerSecond;

// Civil (timezone-free) instant, microseconds since 1970-01-01 00:00:00.
// Sensor logs carry wall-clock stamps; we never convert to a timezone.
struct Timestamp {
    std::int64_t micros = 0;

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct CivilDate {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    friend auto operator<=>(const CivilDate&, const CivilDate&) = default;
};

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(CivilDate d);
CivilDate civil_from_days(std::int64_t days);

// Floor division so pre-1970 instants land on the correct day.
std::int64_t day_index(Timestamp t);
CivilDate civil_date(Timestamp t);

// Seconds since local midnight, fractional part preserved. Range [0, 86400).
double seconds_since_midnight(Timestamp t);

double seconds_between(Timestamp a, Timestamp b);  // b - a

// "YYYY-MM-DD" / "HH:MM:SS[.ffffff]" parsing. Strict field widths and ranges;
// fractional digits beyond microseconds are truncated.
std::optional<CivilDate> parse_date(std::string_view s);
std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time);

std::string format_date(CivilDate d);
// "YYYY-MM-DD HH:MM:SS[.ffffff]" with trailing zeros of the fraction trimmed,
// and the fraction omitted entirely when zero (round-trips the log grammar).
std::string format_timestamp(Timestamp t);

}  // namespace actmon
