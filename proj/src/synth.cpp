#include "actmon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "actmon/config.hpp"
#include "actmon/errors.hpp"
#include "actmon/ingest.hpp"
#include "actmon/rng.hpp"
#include "actmon/textio.hpp"

namespace actmon {

namespace {

double parse_clock(const std::string& v) {
    // HH:MM or HH:MM:SS
    const auto fields = split_on(v, ':');
    if (fields.size() != 2 && fields.size() != 3) throw BadScenario("bad clock value: " + v);
    const auto h = parse_int(fields[0], "hour");
    const auto m = parse_int(fields[1], "minute");
    const auto s = fields.size() == 3 ? parse_int(fields[2], "second") : 0;
    if (h < 0 || h > 23 || m < 0 || m > 59 || s < 0 || s > 59) {
        throw BadScenario("clock value out of range: " + v);
    }
    return static_cast<double>(h * 3600 + m * 60 + s);
}

std::vector<std::string> parse_sensor_list(const std::string& v) {
    std::vector<std::string> out;
    for (const auto part : split_on(v, ',')) {
        const auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

}  // namespace

SynthScenario SynthScenario::from_text(const std::string& text) {
    SynthScenario scenario;
    bool saw_activity = false;
    for (const auto& section : parse_kv_sections(text)) {
        if (section.name.empty()) {
            for (const auto& [key, value] : section.entries) {
                if (key == "days") {
                    scenario.days = static_cast<std::size_t>(parse_int(value, key));
                } else if (key == "start_date") {
                    const auto d = parse_date(value);
                    if (!d) throw BadScenario("bad start_date: " + value);
                    scenario.start_date = *d;
                } else if (key == "noise_sensors") {
                    scenario.noise_sensors = parse_sensor_list(value);
                } else if (key == "noise_events_per_day") {
                    scenario.noise_events_per_day = parse_double(value, key);
                } else if (key == "anomaly_rate") {
                    scenario.anomaly_rate = parse_double(value, key);
                } else if (key == "anomaly_duration_factor") {
                    scenario.anomaly_duration_factor = parse_double(value, key);
                } else {
                    throw BadScenario("unknown scenario key: " + key);
                }
            }
            continue;
        }
        if (section.name != "activity") throw BadScenario("unknown section: " + section.name);
        if (section.arg.empty()) throw BadScenario("activity section needs a name");
        ActivityScript script;
        script.name = section.arg;
        for (const auto& [key, value] : section.entries) {
            if (key == "start") script.start_s = parse_clock(value);
            else if (key == "start_jitter_min") script.start_jitter_s = parse_double(value, key) * 60.0;
            else if (key == "duration_min") script.duration_s = parse_double(value, key) * 60.0;
            else if (key == "duration_jitter_min") {
                script.duration_jitter_s = parse_double(value, key) * 60.0;
            } else if (key == "events_per_min") script.events_per_min = parse_double(value, key);
            else if (key == "sensors") script.sensors = parse_sensor_list(value);
            else if (key == "daily_probability") script.daily_probability = parse_double(value, key);
            else throw BadScenario("unknown activity key: " + key);
        }
        if (script.sensors.empty()) throw BadScenario("activity " + script.name + " has no sensors");
        if (script.duration_s <= 0.0) throw BadScenario("activity " + script.name + " needs duration_min");
        if (script.events_per_min <= 0.0) {
            throw BadScenario("activity " + script.name + " needs positive events_per_min");
        }
        scenario.activities.push_back(std::move(script));
        saw_activity = true;
    }
    if (scenario.days == 0) throw BadScenario("scenario needs days >= 1");
    if (!saw_activity) throw BadScenario("scenario defines no activities");
    if (scenario.anomaly_rate < 0.0 || scenario.anomaly_rate > 1.0) {
        throw BadScenario("anomaly_rate must lie in [0, 1]");
    }
    if (scenario.noise_events_per_day > 0.0 && scenario.noise_sensors.empty()) {
        throw BadScenario("noise_events_per_day set but no noise_sensors");
    }
    return scenario;
}

SynthScenario SynthScenario::from_file(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const DataError& e) {
        throw BadScenario(e.what());
    }
    return from_text(text);
}

namespace {

struct PendingEvent {
    std::int64_t micros;
    std::string sensor;
    std::string value;
    std::string annotation;  // full " <activity> <marker>" suffix or empty
};

}  // namespace

std::vector<std::string> synth_generate(const SynthScenario& scenario, std::uint64_t seed) {
    Rng rng(seed);
    const std::int64_t base = days_from_civil(scenario.start_date) * kMicrosPerDay;
    std::vector<PendingEvent> events;
    std::map<std::string, std::int64_t> busy_until;  // per activity, absolute micros

    for (std::size_t day = 0; day < scenario.days; ++day) {
        for (const auto& script : scenario.activities) {
            if (rng.uniform() >= script.daily_probability) continue;

            double start_s = script.start_s +
                             rng.uniform(-script.start_jitter_s, script.start_jitter_s);
            if (start_s < 0.0) start_s += kSecondsPerDay;
            double duration_s = script.duration_s +
                                rng.uniform(-script.duration_jitter_s, script.duration_jitter_s);
            duration_s = std::max(duration_s, 60.0);
            if (rng.uniform() < scenario.anomaly_rate) {
                duration_s *= scenario.anomaly_duration_factor;
            }

            const std::int64_t start =
                base + static_cast<std::int64_t>(day) * kMicrosPerDay +
                static_cast<std::int64_t>(start_s * kMicrosPerSecond);
            const std::int64_t end = start + static_cast<std::int64_t>(duration_s * kMicrosPerSecond);

            // Skip a draw that would overlap the activity's previous instance.
            auto& busy = busy_until[script.name];
            if (start <= busy) continue;
            busy = end;

            const auto pick = [&] { return script.sensors[rng.bounded(script.sensors.size())]; };
            events.push_back({start, pick(), "ON", " " + script.name + " begin"});
            const double rate_per_s = script.events_per_min / 60.0;
            double t = static_cast<double>(start) / kMicrosPerSecond;
            const double end_s_abs = static_cast<double>(end) / kMicrosPerSecond;
            while (true) {
                t += rng.exponential(rate_per_s);
                if (t >= end_s_abs - 1.0) break;
                events.push_back({static_cast<std::int64_t>(t * kMicrosPerSecond), pick(), "ON", ""});
            }
            events.push_back({end, pick(), "OFF", " " + script.name + " end"});
        }
    }

    const auto total_noise = static_cast<std::size_t>(
        scenario.noise_events_per_day * static_cast<double>(scenario.days));
    for (std::size_t i = 0; i < total_noise; ++i) {
        const std::int64_t t =
            base + static_cast<std::int64_t>(rng.uniform(
                       0.0, static_cast<double>(scenario.days) * kSecondsPerDay) *
                   kMicrosPerSecond);
        events.push_back(
            {t, scenario.noise_sensors[rng.bounded(scenario.noise_sensors.size())], "ON", ""});
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const PendingEvent& a, const PendingEvent& b) { return a.micros < b.micros; });

    std::vector<std::string> lines;
    lines.reserve(events.size());
    for (const auto& e : events) {
        lines.push_back(format_timestamp(Timestamp{e.micros}) + " " + e.sensor + " " + e.value +
                        e.annotation);
    }
    return lines;
}

}  // namespace actmon
