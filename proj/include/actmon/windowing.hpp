#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "actmon/ingest.hpp"

namespace actmon {

enum class MiMode {
    per_instance,  // Q = labeled segments (default)
    per_type,      // Q = distinct activity names, sensors unioned per name
};

// Pairwise sensor co-activation frequency over activity instances: entry
// (i, j) is the fraction of instances in which both sensors fired at least
// once. Symmetric, entries in [0, 1]; the diagonal is each sensor's own
// firing fraction.
struct MIMatrix {
    std::vector<std::string> sensors;  // registry order
    std::vector<double> values;        // row-major |S| x |S|

    double at(std::size_t i, std::size_t j) const { return values[i * sensors.size() + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * sensors.size() + j]; }

    std::string to_tsv() const;  // header row/column of codes, 6-decimal fixed point
    static MIMatrix from_tsv(const std::string& text);
};

MIMatrix compute_mi_matrix(const EventDataset& ds, MiMode mode = MiMode::per_instance);

// Fixed-count window of consecutive events, identified by its first index.
struct Window {
    std::size_t begin = 0;  // index of the first event
    std::size_t size = 0;   // always W
    std::string label;      // label of the last event (training only)
};

std::vector<Window> make_windows(std::size_t n_events, std::span<const std::string> labels,
                                 std::size_t window_size);

enum class FeatureKind { numeric, categorical };

struct FeatureSchema {
    std::vector<std::string> names;
    std::vector<FeatureKind> kinds;

    std::size_t size() const { return names.size(); }
    bool operator==(const FeatureSchema&) const = default;
};

// count_<code> per registry sensor, then end_time_s, duration_s,
// last_sensor, prev_sensor.
FeatureSchema window_feature_schema(const std::vector<std::string>& registry);

struct VectorizeStats {
    std::size_t unknown_sensor_events = 0;
};

// One aggregated row per window: per-sensor occurrence counts weighted by
// MI(sensor, last sensor), window end time and duration, and the last two
// sensor ids as categorical registry indices. Sensors missing from the
// registry map to the reserved index |S| with weight 0.
std::vector<double> vectorize_window(std::span<const SensorEvent> events, const Window& w,
                                     const MIMatrix& mi, VectorizeStats* stats = nullptr);

}  // namespace actmon
