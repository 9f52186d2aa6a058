#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include "actmon/analytics.hpp"
#include "actmon/config.hpp"
#include "actmon/forest.hpp"
#include "actmon/lstm.hpp"
#include "actmon/replay.hpp"
#include "actmon/synth.hpp"

namespace actmon {

// Activity classifier artifact: forest + MI matrix + windowing parameters.
struct ActivityModelBundle {
    RandomForestModel model;
    MIMatrix mi;
    std::size_t window = 20;
    std::size_t min_run = 2;
    MiMode mi_mode = MiMode::per_instance;

    void save(const std::string& dir) const;
    static ActivityModelBundle load(const std::string& dir);
};

// Anomaly detector artifact: forest + the activity-code table and labeling
// rules it was trained against.
struct AnomalyModelBundle {
    RandomForestModel model;
    std::vector<std::string> activities;  // categorical code order (sorted)
    AnomalyRules rules;

    void save(const std::string& dir) const;
    static AnomalyModelBundle load(const std::string& dir);
};

struct ParseCmd {
    std::string log;
    std::string events_out;
    std::string report_out;
};
void cmd_parse(const ParseCmd& opt, std::ostream& out);

struct MiCmd {
    std::string log;
    std::string out_path;
    MiMode mode = MiMode::per_instance;
};
void cmd_mi(const MiCmd& opt, std::ostream& out);

struct SynthCmd {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string out_path;
};
void cmd_synth(const SynthCmd& opt, std::ostream& out);

struct TrainActivityCmd {
    std::string log;
    std::string out_dir;
    PipelineConfig config;
    std::string report_out;
    std::string importance_out;
    std::string importance_class;  // per-class variant when set
};
void cmd_train_activity(const TrainActivityCmd& opt, std::ostream& out);

struct TrainAnomalyCmd {
    std::string log;
    std::string activity_model_dir;  // empty = use annotation labels directly
    std::string out_dir;
    PipelineConfig config;
    std::string report_out;
    std::string records_out;
    std::string importance_out;
    std::string roc_out;
};
void cmd_train_anomaly(const TrainAnomalyCmd& opt, std::ostream& out);

struct EvalCmd {
    std::string task;  // "activity" | "anomaly"
    std::string model_dir;
    std::string log;      // activity task
    std::string records;  // anomaly task (records CSV)
    PipelineConfig config;
    bool heldout_only = false;  // re-derive the training split, score its test half
    std::string report_out;
    std::string roc_out;
};
void cmd_eval(const EvalCmd& opt, std::ostream& out);

struct TrainForecastCmd {
    std::string series;              // day,value CSV
    std::string log;                 // alternative source
    std::string activity_model_dir;  // with log: predict labels; empty: annotations
    std::string activity;
    SeriesMetric metric = SeriesMetric::duration;
    std::string out_path;
    PipelineConfig config;
};
void cmd_train_forecast(const TrainForecastCmd& opt, std::ostream& out);

struct ForecastCmd {
    std::string model_path;
    std::string series;  // history CSV; the last lookback values feed the model
    std::string out_path;
    double z_threshold = 3.0;
    bool emit_alerts = false;  // forecast_risk alert lines for flagged days
};
void cmd_forecast(const ForecastCmd& opt, std::ostream& out);

struct ReplayCmd {
    std::string log;
    std::string activity_model_dir;
    std::string anomaly_model_dir;
    double speed = 0.0;
    std::string alerts_out;  // empty = stdout
};
void cmd_replay(const ReplayCmd& opt, std::ostream& out);

// Shared helpers (also used by the acceptance suite).
Dataset dataset_subset(const Dataset& data, std::span<const std::size_t> rows);

struct WindowTable {
    EventDataset ds;
    MIMatrix mi;
    Dataset table;  // one row per window
};
WindowTable build_window_table(const std::string& log_path, const MIMatrix* reuse_mi,
                               std::size_t window, MiMode mode);

// Per-event predicted labels for events with a full trailing window,
// alongside their timestamps.
struct PredictedStream {
    std::vector<Timestamp> times;
    std::vector<std::string> labels;
};
PredictedStream predict_event_labels(const EventDataset& ds, const ActivityModelBundle& bundle);

}  // namespace actmon
