#include "actmon/ingest.hpp"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <unordered_map>

#include "actmon/textio.hpp"

namespace actmon {

std::string_view sensor_kind_name(SensorKind k) {
    switch (k) {
        case SensorKind::motion: return "motion";
        case SensorKind::item: return "item";
        case SensorKind::door: return "door";
        case SensorKind::light: return "light";
        case SensorKind::burner: return "burner";
        case SensorKind::hot_water: return "hot-water";
        case SensorKind::cold_water: return "cold-water";
        case SensorKind::other: return "other";
    }
    return "other";
}

SensorKind classify_sensor(std::string_view code) {
    if (code.starts_with("AD1-A")) return SensorKind::burner;
    if (code.starts_with("AD1-B")) return SensorKind::hot_water;
    if (code.starts_with("AD1-C")) return SensorKind::cold_water;
    if (code.starts_with("M")) return SensorKind::motion;
    if (code.starts_with("I")) return SensorKind::item;
    if (code.starts_with("D")) return SensorKind::door;
    if (code.starts_with("L")) return SensorKind::light;
    return SensorKind::other;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

}  // namespace

std::variant<SensorEvent, ParseError> parse_line(std::string_view line) {
    const auto fields = split_fields(line);
    if (fields.size() != 4 && fields.size() != 6) {
        return ParseError{ParseErrorKind::malformed_line,
                          "expected 4 or 6 fields, got " + std::to_string(fields.size())};
    }
    const auto ts = parse_timestamp(fields[0], fields[1]);
    if (!ts) {
        return ParseError{ParseErrorKind::bad_timestamp,
                          "bad timestamp '" + std::string(fields[0]) + " " + std::string(fields[1]) + "'"};
    }
    SensorEvent e;
    e.timestamp = *ts;
    e.sensor = std::string(fields[2]);
    e.value = std::string(fields[3]);
    if (fields.size() == 6) {
        const std::string marker = lower(fields[5]);
        if (marker != "begin" && marker != "end") {
            return ParseError{ParseErrorKind::bad_marker,
                              "marker '" + std::string(fields[5]) + "' is not begin/end"};
        }
        e.annotation = Annotation{std::string(fields[4]), marker == "begin"};
    }
    return e;
}

std::size_t EventDataset::sensor_index(std::string_view code) const {
    for (std::size_t i = 0; i < sensor_registry.size(); ++i) {
        if (sensor_registry[i] == code) return i;
    }
    return npos;
}

namespace {

// First-open/first-close matching per activity name; the fallback for a
// dangling begin is the last event annotated with that activity.
std::vector<LabeledSegment> reconstruct_segments(const std::vector<SensorEvent>& events,
                                                 ParseReport& report) {
    std::vector<LabeledSegment> segments;
    std::unordered_map<std::string, std::vector<std::size_t>> open;  // activity -> segment ids (FIFO)
    std::unordered_map<std::string, std::size_t> last_annotated;     // activity -> last event index

    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& ann = events[i].annotation;
        if (!ann) continue;
        last_annotated[ann->activity] = i;
        if (ann->is_begin) {
            LabeledSegment seg;
            seg.activity = ann->activity;
            seg.start = events[i].timestamp;
            seg.first_index = i;
            open[ann->activity].push_back(segments.size());
            segments.push_back(std::move(seg));
        } else {
            auto it = open.find(ann->activity);
            if (it == open.end() || it->second.empty()) {
                ++report.unmatched_ends;  // end with no open begin: dropped
                continue;
            }
            auto& seg = segments[it->second.front()];
            it->second.erase(it->second.begin());
            seg.end = events[i].timestamp;
            seg.last_index = i;
        }
    }

    for (auto& [activity, ids] : open) {
        for (std::size_t id : ids) {
            auto& seg = segments[id];
            ++report.unmatched_begins;
            seg.closed_by_end = false;
            seg.last_index = last_annotated[activity];
            seg.end = events[seg.last_index].timestamp;
        }
    }

    std::sort(segments.begin(), segments.end(), [](const LabeledSegment& a, const LabeledSegment& b) {
        return a.first_index < b.first_index;
    });

    // Events inside the span join the segment unless annotated with a
    // different activity.
    for (auto& seg : segments) {
        for (std::size_t i = seg.first_index; i <= seg.last_index; ++i) {
            const auto& ann = events[i].annotation;
            if (ann && ann->activity != seg.activity) continue;
            seg.event_indices.push_back(i);
        }
    }
    return segments;
}

}  // namespace

EventDataset parse_dataset(const std::vector<std::string>& lines) {
    EventDataset ds;
    std::int64_t max_seen = INT64_MIN;
    for (const auto& raw : lines) {
        const auto line = trim(raw);
        if (line.empty()) continue;
        ++ds.report.total_lines;
        auto parsed = parse_line(line);
        if (auto* err = std::get_if<ParseError>(&parsed)) {
            ++ds.report.malformed;
            if (ds.report.sample_errors.size() < 5) {
                ds.report.sample_errors.push_back("line " + std::to_string(ds.report.total_lines) +
                                                  ": " + err->message);
            }
            continue;
        }
        auto& e = std::get<SensorEvent>(parsed);
        if (e.timestamp.micros < max_seen) ++ds.report.reordered;
        max_seen = std::max(max_seen, e.timestamp.micros);
        ds.events.push_back(std::move(e));
    }
    ds.report.events = ds.events.size();

    std::stable_sort(ds.events.begin(), ds.events.end(),
                     [](const SensorEvent& a, const SensorEvent& b) { return a.timestamp < b.timestamp; });

    for (const auto& e : ds.events) {
        if (ds.sensor_index(e.sensor) == EventDataset::npos) ds.sensor_registry.push_back(e.sensor);
    }

    ds.segments = reconstruct_segments(ds.events, ds.report);
    return ds;
}

EventDataset parse_dataset_file(const std::string& path) {
    return parse_dataset(read_lines(path));
}

std::vector<std::string> label_events(const EventDataset& ds) {
    std::vector<std::string> labels(ds.events.size(), std::string(kOtherActivity));
    // Segments are sorted by begin index, so overwriting in order leaves each
    // event with the latest-begun segment that claims it (innermost-open).
    for (const auto& seg : ds.segments) {
        for (std::size_t i : seg.event_indices) labels[i] = seg.activity;
    }
    return labels;
}

std::string serialize_event(const SensorEvent& e) {
    std::string out = format_timestamp(e.timestamp);
    out += ' ';
    out += e.sensor;
    out += ' ';
    out += e.value;
    if (e.annotation) {
        out += ' ';
        out += e.annotation->activity;
        out += e.annotation->is_begin ? " begin" : " end";
    }
    return out;
}

std::vector<std::string> serialize_dataset(const EventDataset& ds) {
    std::vector<std::string> lines;
    lines.reserve(ds.events.size());
    for (const auto& e : ds.events) lines.push_back(serialize_event(e));
    return lines;
}

std::string ParseReport::to_text() const {
    std::ostringstream os;
    os << "lines " << total_lines << "\n"
       << "events " << events << "\n"
       << "malformed " << malformed << "\n"
       << "reordered " << reordered << "\n"
       << "unmatched_begins " << unmatched_begins << "\n"
       << "unmatched_ends " << unmatched_ends << "\n";
    for (const auto& s : sample_errors) os << "error " << s << "\n";
    return os.str();
}

}  // namespace actmon
