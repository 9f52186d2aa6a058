#include "actmon/windowing.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "actmon/errors.hpp"
#include "actmon/textio.hpp"

namespace actmon {

namespace {

std::vector<std::set<std::size_t>> firing_sets(const EventDataset& ds, MiMode mode) {
    std::vector<std::set<std::size_t>> sets;
    if (mode == MiMode::per_instance) {
        sets.reserve(ds.segments.size());
        for (const auto& seg : ds.segments) {
            std::set<std::size_t> fired;
            for (std::size_t i : seg.event_indices) fired.insert(ds.sensor_index(ds.events[i].sensor));
            sets.push_back(std::move(fired));
        }
    } else {
        std::unordered_map<std::string, std::set<std::size_t>> by_type;
        std::vector<std::string> order;
        for (const auto& seg : ds.segments) {
            if (!by_type.contains(seg.activity)) order.push_back(seg.activity);
            auto& fired = by_type[seg.activity];
            for (std::size_t i : seg.event_indices) fired.insert(ds.sensor_index(ds.events[i].sensor));
        }
        for (const auto& name : order) sets.push_back(std::move(by_type[name]));
    }
    return sets;
}

}  // namespace

MIMatrix compute_mi_matrix(const EventDataset& ds, MiMode mode) {
    if (ds.segments.empty()) throw NoSegments("cannot compute MI matrix: dataset has no labeled segments");
    const std::size_t s = ds.sensor_registry.size();
    MIMatrix mi;
    mi.sensors = ds.sensor_registry;
    mi.values.assign(s * s, 0.0);

    const auto sets = firing_sets(ds, mode);
    for (const auto& fired : sets) {
        for (auto it = fired.begin(); it != fired.end(); ++it) {
            for (auto jt = it; jt != fired.end(); ++jt) {
                mi.at(*it, *jt) += 1.0;
                if (*it != *jt) mi.at(*jt, *it) += 1.0;
            }
        }
    }
    const double q = static_cast<double>(sets.size());
    for (auto& v : mi.values) v /= q;
    return mi;
}

std::string MIMatrix::to_tsv() const {
    std::ostringstream os;
    os << "sensor";
    for (const auto& code : sensors) os << '\t' << code;
    os << '\n';
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        os << sensors[i];
        for (std::size_t j = 0; j < sensors.size(); ++j) os << '\t' << fmt_fixed(at(i, j), 6);
        os << '\n';
    }
    return os.str();
}

MIMatrix MIMatrix::from_tsv(const std::string& text) {
    MIMatrix mi;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("MI matrix file is empty");
    {
        const auto header = split_on(trim(line), '\t');
        if (header.empty() || header[0] != "sensor") throw DataError("MI matrix header must start with 'sensor'");
        for (std::size_t i = 1; i < header.size(); ++i) mi.sensors.emplace_back(header[i]);
    }
    const std::size_t s = mi.sensors.size();
    mi.values.assign(s * s, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
        if (!std::getline(in, line)) throw DataError("MI matrix truncated");
        const auto fields = split_on(trim(line), '\t');
        if (fields.size() != s + 1 || fields[0] != mi.sensors[i]) {
            throw DataError("MI matrix row " + std::to_string(i) + " malformed");
        }
        for (std::size_t j = 0; j < s; ++j) mi.at(i, j) = parse_double(fields[j + 1], "MI entry");
    }
    return mi;
}

std::vector<Window> make_windows(std::size_t n_events, std::span<const std::string> labels,
                                 std::size_t window_size) {
    if (window_size < 2) throw InvalidConfig("window size must be >= 2");
    if (n_events < window_size) {
        throw StreamTooShort("stream has " + std::to_string(n_events) + " events, need >= " +
                             std::to_string(window_size));
    }
    const bool labeled = !labels.empty();
    if (labeled && labels.size() != n_events) throw LengthMismatch("labels/events size mismatch");
    std::vector<Window> windows;
    windows.reserve(n_events - window_size + 1);
    for (std::size_t i = 0; i + window_size <= n_events; ++i) {
        Window w;
        w.begin = i;
        w.size = window_size;
        if (labeled) w.label = labels[i + window_size - 1];
        windows.push_back(std::move(w));
    }
    return windows;
}

FeatureSchema window_feature_schema(const std::vector<std::string>& registry) {
    FeatureSchema schema;
    schema.names.reserve(registry.size() + 4);
    for (const auto& code : registry) {
        schema.names.push_back("count_" + code);
        schema.kinds.push_back(FeatureKind::numeric);
    }
    schema.names.push_back("end_time_s");
    schema.kinds.push_back(FeatureKind::numeric);
    schema.names.push_back("duration_s");
    schema.kinds.push_back(FeatureKind::numeric);
    schema.names.push_back("last_sensor");
    schema.kinds.push_back(FeatureKind::categorical);
    schema.names.push_back("prev_sensor");
    schema.kinds.push_back(FeatureKind::categorical);
    return schema;
}

std::vector<double> vectorize_window(std::span<const SensorEvent> events, const Window& w,
                                     const MIMatrix& mi, VectorizeStats* stats) {
    const std::size_t s = mi.sensors.size();
    const std::size_t unknown = s;  // reserved categorical code
    std::vector<double> row(s + 4, 0.0);

    std::unordered_map<std::string_view, std::size_t> index;
    index.reserve(s);
    for (std::size_t i = 0; i < s; ++i) index.emplace(mi.sensors[i], i);
    const auto lookup = [&](const std::string& code) {
        const auto it = index.find(code);
        if (it != index.end()) return it->second;
        if (stats != nullptr) ++stats->unknown_sensor_events;
        return unknown;
    };

    std::vector<std::size_t> codes(w.size);
    for (std::size_t i = 0; i < w.size; ++i) codes[i] = lookup(events[w.begin + i].sensor);

    const SensorEvent& last = events[w.begin + w.size - 1];
    const std::size_t anchor = codes[w.size - 1];
    for (std::size_t si : codes) {
        if (si == unknown || anchor == unknown) continue;  // weight 0
        row[si] += mi.at(si, anchor);
    }
    row[s] = seconds_since_midnight(last.timestamp);
    row[s + 1] = seconds_between(events[w.begin].timestamp, last.timestamp);
    row[s + 2] = static_cast<double>(anchor);
    row[s + 3] = static_cast<double>(codes[w.size - 2]);
    return row;
}

}  // namespace actmon
