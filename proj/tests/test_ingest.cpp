#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <string>
#include <vector>

#include "actmon/ingest.hpp"
#include "actmon/rng.hpp"
#include "doctest.h"

using namespace actmon;

namespace {

SensorEvent event_of(std::string_view line) {
    auto parsed = parse_line(line);
    REQUIRE(std::holds_alternative<SensorEvent>(parsed));
    return std::get<SensorEvent>(parsed);
}

ParseError error_of(std::string_view line) {
    auto parsed = parse_line(line);
    REQUIRE(std::holds_alternative<ParseError>(parsed));
    return std::get<ParseError>(parsed);
}

}  // namespace

TEST_CASE("parse_line maps the log grammar") {
    const auto e = event_of("2009-02-02 12:18:05.406 M31 ON R1_Work begin");
    CHECK(e.sensor == "M31");
    CHECK(e.value == "ON");
    REQUIRE(e.annotation.has_value());
    CHECK(e.annotation->activity == "R1_Work");
    CHECK(e.annotation->is_begin);
    CHECK(format_timestamp(e.timestamp) == "2009-02-02 12:18:05.406");

    const auto plain = event_of("2009-02-02 12:20:01.003 D07 CLOSE");
    CHECK(plain.sensor == "D07");
    CHECK(!plain.annotation.has_value());

    CHECK(error_of("2009-02-02 M31 ON").kind == ParseErrorKind::malformed_line);
    CHECK(error_of("2009-02-02 12:18:05 M31 ON R1_Work started").kind == ParseErrorKind::bad_marker);
    CHECK(error_of("2009-13-02 12:18:05 M31 ON").kind == ParseErrorKind::bad_timestamp);
    CHECK(error_of("2009-02-02 25:18:05 M31 ON").kind == ParseErrorKind::bad_timestamp);
}

TEST_CASE("timestamps without a fraction read as .000 and tabs separate fields") {
    const auto e = event_of("2009-02-02\t08:00:07  M01  OFF");
    CHECK(e.timestamp.micros % kMicrosPerSecond == 0);
    CHECK(format_timestamp(e.timestamp) == "2009-02-02 08:00:07");
    CHECK(seconds_since_midnight(e.timestamp) == doctest::Approx(8 * 3600 + 7));
}

TEST_CASE("sensor kinds derive from the code prefix") {
    CHECK(classify_sensor("M31") == SensorKind::motion);
    CHECK(classify_sensor("I04") == SensorKind::item);
    CHECK(classify_sensor("D07") == SensorKind::door);
    CHECK(classify_sensor("L008") == SensorKind::light);
    CHECK(classify_sensor("AD1-A") == SensorKind::burner);
    CHECK(classify_sensor("AD1-B") == SensorKind::hot_water);
    CHECK(classify_sensor("AD1-C") == SensorKind::cold_water);
    CHECK(classify_sensor("T003") == SensorKind::other);
}

TEST_CASE("parse_dataset reconstructs a single matched pair") {
    const std::vector<std::string> lines{
        "2009-02-02 08:00:00 M1 ON A begin",
        "2009-02-02 08:00:01 M2 ON",
        "2009-02-02 08:00:02 M1 OFF A end",
        "2009-02-02 08:00:03 M3 ON",
    };
    const auto ds = parse_dataset(lines);
    REQUIRE(ds.events.size() == 4);
    REQUIRE(ds.segments.size() == 1);
    CHECK(ds.segments[0].activity == "A");
    CHECK(ds.segments[0].first_index == 0);
    CHECK(ds.segments[0].last_index == 2);
    CHECK(ds.segments[0].event_indices == std::vector<std::size_t>{0, 1, 2});

    const auto labels = label_events(ds);
    CHECK(labels == std::vector<std::string>{"A", "A", "A", std::string(kOtherActivity)});
    CHECK(ds.sensor_registry == std::vector<std::string>{"M1", "M2", "M3"});
}

TEST_CASE("nested same-name pairs resolve first-open/first-close") {
    const std::vector<std::string> lines{
        "2009-02-02 08:00:00 M1 ON A begin",
        "2009-02-02 08:00:01 M1 ON A begin",
        "2009-02-02 08:00:02 M1 OFF A end",
    };
    const auto ds = parse_dataset(lines);
    REQUIRE(ds.segments.size() == 2);
    CHECK(ds.report.unmatched_begins == 1);
    // First begin matched by the end.
    CHECK(ds.segments[0].first_index == 0);
    CHECK(ds.segments[0].last_index == 2);
    CHECK(ds.segments[0].closed_by_end);
    // Second begin closed at the last A-annotated event.
    CHECK(!ds.segments[1].closed_by_end);
    CHECK(ds.segments[1].first_index == 1);
    CHECK(ds.segments[1].last_index == 2);
}

TEST_CASE("unmatched end is dropped and flagged") {
    const std::vector<std::string> lines{
        "2009-02-02 08:00:00 M1 ON",
        "2009-02-02 08:00:01 M1 OFF A end",
    };
    const auto ds = parse_dataset(lines);
    CHECK(ds.segments.empty());
    CHECK(ds.report.unmatched_ends == 1);
}

TEST_CASE("empty input gives an empty dataset") {
    const auto ds = parse_dataset({});
    CHECK(ds.events.empty());
    CHECK(ds.segments.empty());
    CHECK(ds.sensor_registry.empty());
}

TEST_CASE("overlapping segments label by the latest open begin") {
    const std::vector<std::string> lines{
        "2009-02-02 01:00:00 M1 ON R1_Sleep begin",
        "2009-02-02 05:00:00 M2 ON R2_Work begin",
        "2009-02-02 06:00:00 M3 ON",
        "2009-02-02 07:00:00 M2 OFF R2_Work end",
        "2009-02-02 08:00:00 M1 OFF R1_Sleep end",
    };
    const auto ds = parse_dataset(lines);
    REQUIRE(ds.segments.size() == 2);
    const auto labels = label_events(ds);
    CHECK(labels[2] == "R2_Work");   // innermost-open
    CHECK(labels[4] == "R1_Sleep");  // after R2_Work closed
}

TEST_CASE("out-of-order lines are re-sorted stably and counted") {
    const std::vector<std::string> lines{
        "2009-02-02 08:00:05 M2 ON",
        "2009-02-02 08:00:01 M1 ON",
        "2009-02-02 08:00:03 M3 ON",
    };
    const auto ds = parse_dataset(lines);
    CHECK(ds.report.reordered == 2);
    for (std::size_t i = 1; i < ds.events.size(); ++i) {
        CHECK(ds.events[i - 1].timestamp <= ds.events[i].timestamp);
    }
    CHECK(ds.events[0].sensor == "M1");
}

TEST_CASE("malformed lines are counted, not fatal") {
    const std::vector<std::string> lines{
        "garbage",
        "2009-02-02 08:00:01 M1 ON",
        "",
        "2009-02-02 08:00:02 M2",
    };
    const auto ds = parse_dataset(lines);
    CHECK(ds.events.size() == 1);
    CHECK(ds.report.malformed == 2);
    CHECK(ds.report.total_lines == 3);  // blank line skipped
    const auto text = ds.report.to_text();
    CHECK(text.find("malformed 2") != std::string::npos);
}

namespace {

// Random annotated log: a few activities with begin/end pairs plus noise.
std::vector<std::string> random_log(Rng& rng) {
    const std::vector<std::string> activities{"R1_Work", "R1_Sleep", "R2_Eat"};
    const std::vector<std::string> sensors{"M1", "M2", "M3", "D1", "I2"};
    std::vector<std::string> lines;
    std::int64_t t = Timestamp{}.micros + 1'000'000'000;
    const int n_segments = 1 + static_cast<int>(rng.bounded(4));
    for (int s = 0; s < n_segments; ++s) {
        const auto& act = activities[rng.bounded(activities.size())];
        const int inner = static_cast<int>(rng.bounded(4));
        const auto stamp = [&] {
            t += static_cast<std::int64_t>(rng.bounded(5'000'000)) + 1;
            return format_timestamp(Timestamp{t});
        };
        lines.push_back(stamp() + " " + sensors[rng.bounded(sensors.size())] + " ON " + act + " begin");
        for (int i = 0; i < inner; ++i) {
            lines.push_back(stamp() + " " + sensors[rng.bounded(sensors.size())] + " ON");
        }
        lines.push_back(stamp() + " " + sensors[rng.bounded(sensors.size())] + " OFF " + act + " end");
    }
    return lines;
}

}  // namespace

TEST_CASE("round-trip: serialize then re-parse preserves events and segments") {
    Rng rng(42);
    for (int iter = 0; iter < 50; ++iter) {
        const auto ds = parse_dataset(random_log(rng));
        const auto ds2 = parse_dataset(serialize_dataset(ds));
        CHECK(ds.events == ds2.events);
        CHECK(ds.segments == ds2.segments);
        CHECK(ds.sensor_registry == ds2.sensor_registry);
    }
}

TEST_CASE("parse_line never throws on arbitrary bytes") {
    Rng rng(271828);
    for (int iter = 0; iter < 2000; ++iter) {
        std::string line;
        const std::size_t len = rng.bounded(120);
        for (std::size_t i = 0; i < len; ++i) {
            line.push_back(static_cast<char>(rng.bounded(96) + 32 - (rng.bounded(8) == 0 ? 23 : 0)));
        }
        const auto parsed = parse_line(line);  // value or error, no exceptions
        CHECK((std::holds_alternative<SensorEvent>(parsed) ||
               std::holds_alternative<ParseError>(parsed)));
    }
}

TEST_CASE("label totality: every event gets exactly one label") {
    Rng rng(43);
    for (int iter = 0; iter < 30; ++iter) {
        const auto ds = parse_dataset(random_log(rng));
        const auto labels = label_events(ds);
        REQUIRE(labels.size() == ds.events.size());
        // Without overlaps, Other + per-segment assignments account for all events.
        bool overlaps = false;
        for (std::size_t a = 0; a + 1 < ds.segments.size() && !overlaps; ++a) {
            for (std::size_t b = a + 1; b < ds.segments.size(); ++b) {
                if (ds.segments[a].last_index >= ds.segments[b].first_index &&
                    ds.segments[b].last_index >= ds.segments[a].first_index) {
                    overlaps = true;
                    break;
                }
            }
        }
        if (!overlaps) {
            std::size_t assigned = 0;
            for (const auto& seg : ds.segments) assigned += seg.event_indices.size();
            const auto other = static_cast<std::size_t>(
                std::count(labels.begin(), labels.end(), std::string(kOtherActivity)));
            CHECK(other + assigned == ds.events.size());
        }
    }
}
