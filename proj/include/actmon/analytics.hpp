#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actmon/forest.hpp"
#include "actmon/time.hpp"

namespace actmon {

struct ActivityInstance {
    std::string activity;
    Timestamp start;
    Timestamp end;
    double duration_s = 0.0;
    std::int64_t day = 0;            // day index of start
    std::size_t sequence_index = 0;  // ordinal among the day's instances, by start
    std::size_t event_count = 0;

    bool operator==(const ActivityInstance&) const = default;
};

// Run-length aggregation of a predicted label stream. Other_Activity runs
// are dropped; a run shorter than min_run merges into the immediately
// preceding instance when the labels match across the gap; instances still
// shorter than min_run events are discarded.
std::vector<ActivityInstance> aggregate_instances(std::span<const Timestamp> times,
                                                  std::span<const std::string> labels,
                                                  std::size_t min_run = 2);

struct DailyStats {
    std::vector<ActivityInstance> instances;                    // time order
    std::vector<std::string> activities;                        // sorted distinct
    std::int64_t first_day = 0;
    std::int64_t last_day = -1;                                 // empty when < first_day

    std::size_t n_days() const {
        return last_day < first_day ? 0 : static_cast<std::size_t>(last_day - first_day + 1);
    }
    std::size_t frequency(std::int64_t day, std::string_view activity) const;
    std::size_t activity_code(std::string_view activity) const;  // index into activities
};

DailyStats compute_daily_stats(std::vector<ActivityInstance> instances);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::size_t n = 0;
};

MeanStd population_stats(std::span<const double> values);

// (value - mean) / std, zero when std is zero.
double zscore(double value, double mean, double stddev);

// Seconds-since-midnight interval; wraps past midnight when lo > hi.
struct TimeWindow {
    double lo = 0.0;
    double hi = static_cast<double>(kSecondsPerDay);

    bool contains(double x) const { return lo <= hi ? (x >= lo && x <= hi) : (x >= lo || x <= hi); }
    bool operator==(const TimeWindow&) const = default;
};

// Nearest-rank percentile band on the circle of day-seconds: the sample is
// cut at its largest gap, unrolled, and the [p_lo, p_hi] ranks taken there.
TimeWindow circular_percentile_band(std::vector<double> points, double p_lo, double p_hi);

struct ActivityRule {
    TimeWindow start_window;
    TimeWindow end_window;
    std::optional<double> z_threshold;  // per-activity override

    bool operator==(const ActivityRule&) const = default;
};

struct AnomalyRules {
    double z_threshold = 3.0;
    std::map<std::string, ActivityRule> windows;

    double threshold_for(std::string_view activity) const;
    std::string to_text() const;
    static AnomalyRules from_text(const std::string& text);
};

// EDA proxy: per-activity [p1, p99] circular bands of observed start and end
// times.
AnomalyRules default_time_ranges(const DailyStats& stats, double z_threshold = 3.0);

enum class AnomalyReason : unsigned { freq_z = 0, span_z = 1, start_range = 2, end_range = 3 };

std::string_view anomaly_reason_name(AnomalyReason r);

struct AnomalyRecord {
    std::string activity;
    std::int64_t day = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    double duration_s = 0.0;
    std::size_t sequence_index = 0;
    bool abnormal = false;
    std::vector<AnomalyReason> reasons;  // ascending enum order

    // [activity_type, start_s, end_s, duration_s, sequence_index]
    std::vector<double> features(std::size_t activity_code) const;
};

struct AnomalyLabeling {
    std::vector<AnomalyRecord> records;              // parallel to stats.instances
    std::vector<std::string> z_skipped_activities;   // fewer than 2 active days
};

// Rule labeler: an instance is abnormal iff its duration z-score or its
// day's frequency z-score exceeds the threshold, or its start/end falls
// outside the activity's allowed window. Z statistics are per activity over
// the full day range (absent days count frequency 0).
AnomalyLabeling label_anomalies(const DailyStats& stats, const AnomalyRules& rules);

FeatureSchema anomaly_feature_schema();

Dataset anomaly_dataset(const DailyStats& stats, const AnomalyLabeling& labeling);

// Delegates to the random-forest module over the five-feature schema.
RandomForestModel train_anomaly_model(const Dataset& records, const ForestConfig& config);

struct DetectResult {
    std::string label;
    double vote_share = 0.0;             // share of the winning label
    std::vector<double> vote_shares;     // per model class
};

DetectResult detect(const RandomForestModel& model, std::span<const double> features);

// records CSV: header activity,day,start_s,end_s,duration_s,sequence_index,label,reasons
std::string records_to_csv(const AnomalyLabeling& labeling);
AnomalyLabeling records_from_csv(const std::string& text);

enum class SeriesMetric { duration, frequency };

struct DailySeries {
    std::int64_t first_day = 0;
    std::vector<double> values;  // one per consecutive day, gaps filled with 0
};

DailySeries extract_daily_series(const DailyStats& stats, std::string_view activity,
                                 SeriesMetric metric);

std::string series_to_csv(const DailySeries& series);
DailySeries series_from_csv(const std::string& text);

}  // namespace actmon
