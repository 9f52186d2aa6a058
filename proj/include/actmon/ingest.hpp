#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "actmon/time.hpp"

namespace actmon {

inline constexpr std::string_view kOtherActivity = "Other_Activity";

enum class SensorKind { motion, item, door, light, burner, hot_water, cold_water, other };

std::string_view sensor_kind_name(SensorKind k);

// Sensor family is a pure function of the code prefix (M->motion, I->item,
// D->door, L->light, AD1-A/B/C->burner/hot-water/cold-water).
SensorKind classify_sensor(std::string_view code);

struct Annotation {
    std::string activity;
    bool is_begin = false;  // begin / end marker

    bool operator==(const Annotation&) const = default;
};

struct SensorEvent {
    Timestamp timestamp;
    std::string sensor;
    std::string value;
    std::optional<Annotation> annotation;

    bool operator==(const SensorEvent&) const = default;
};

enum class ParseErrorKind { malformed_line, bad_timestamp, bad_marker };

struct ParseError {
    ParseErrorKind kind;
    std::string message;
};

struct LabeledSegment {
    std::string activity;
    Timestamp start;
    Timestamp end;
    std::size_t first_index = 0;  // index of the begin event
    std::size_t last_index = 0;   // index of the closing event
    std::vector<std::size_t> event_indices;  // events assigned to this segment
    bool closed_by_end = true;               // false when the begin was unmatched

    bool operator==(const LabeledSegment&) const = default;
};

struct ParseReport {
    std::size_t total_lines = 0;
    std::size_t events = 0;
    std::size_t malformed = 0;
    std::size_t reordered = 0;  // lines whose timestamp preceded an earlier line's
    std::size_t unmatched_begins = 0;
    std::size_t unmatched_ends = 0;
    std::vector<std::string> sample_errors;  // first few malformed-line messages

    std::string to_text() const;
};

struct EventDataset {
    std::vector<SensorEvent> events;            // non-decreasing timestamps
    std::vector<LabeledSegment> segments;       // in begin order
    std::vector<std::string> sensor_registry;   // first-appearance order
    ParseReport report;

    std::size_t sensor_index(std::string_view code) const;  // npos when unknown
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// One physical log line:
//   <YYYY-MM-DD> <HH:MM:SS[.ffffff]> <sensor> <value> [<activity> <begin|end>]
std::variant<SensorEvent, ParseError> parse_line(std::string_view line);

// Tolerant whole-file parse: blank lines skipped, malformed lines counted,
// out-of-order events stably re-sorted, begin/end pairs matched
// first-open/first-close per activity name.
EventDataset parse_dataset(const std::vector<std::string>& lines);
EventDataset parse_dataset_file(const std::string& path);

// One label per event: containing segment's activity, innermost-open rule on
// overlaps, kOtherActivity outside every segment.
std::vector<std::string> label_events(const EventDataset& ds);

std::string serialize_event(const SensorEvent& e);
std::vector<std::string> serialize_dataset(const EventDataset& ds);

}  // namespace actmon
