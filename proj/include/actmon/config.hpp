#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "actmon/forest.hpp"
#include "actmon/lstm.hpp"
#include "actmon/windowing.hpp"

namespace actmon {

// "key = value" lines with optional "[section arg]" headers, '#' comments.
// Section-less keys live under the empty section name.
struct KvSection {
    std::string name;  // e.g. "activity"
    std::string arg;   // e.g. "R1_Sleep"
    std::vector<std::pair<std::string, std::string>> entries;
};

std::vector<KvSection> parse_kv_sections(const std::string& text);

struct PipelineConfig {
    std::size_t window = 20;
    std::uint64_t seed = 42;
    std::size_t min_run = 2;
    MiMode mi_mode = MiMode::per_instance;

    ForestConfig activity_rf;  // seed is derived from the pipeline seed
    ForestConfig anomaly_rf;

    double z_threshold = 3.0;
    std::string rules_path;

    ForecastConfig lstm;

    double split_ratio = 0.8;
    bool stratified = false;
    bool chronological = false;

    // Unknown keys are rejected.
    static PipelineConfig from_text(const std::string& text);
    static PipelineConfig from_file(const std::string& path);
    std::string to_text() const;
};

}  // namespace actmon
