#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actmon/time.hpp"

namespace actmon {

// One scripted activity: a daily occurrence at a jittered time of day with a
// jittered duration, firing sensors drawn from its signature set.
struct ActivityScript {
    std::string name;
    double start_s = 0.0;             // nominal start, seconds since midnight
    double start_jitter_s = 0.0;      // uniform +/- jitter
    double duration_s = 0.0;
    double duration_jitter_s = 0.0;
    double events_per_min = 0.5;
    std::vector<std::string> sensors;
    double daily_probability = 1.0;
};

struct SynthScenario {
    std::size_t days = 30;
    CivilDate start_date{2024, 1, 1};
    std::vector<std::string> noise_sensors;
    double noise_events_per_day = 0.0;
    double anomaly_rate = 0.0;             // chance an instance becomes a duration outlier
    double anomaly_duration_factor = 6.0;  // multiplier applied to outlier durations
    std::vector<ActivityScript> activities;

    static SynthScenario from_text(const std::string& text);
    static SynthScenario from_file(const std::string& path);
};

// Deterministic labeled CASAS-format log. Every instance carries begin/end
// annotations; noise events stay unannotated. Instances of the same activity
// never overlap (a day's draw is skipped if the previous one still runs).
std::vector<std::string> synth_generate(const SynthScenario& scenario, std::uint64_t seed);

}  // namespace actmon
