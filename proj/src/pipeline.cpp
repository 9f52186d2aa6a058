#include "actmon/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "actmon/errors.hpp"
#include "actmon/metrics.hpp"
#include "actmon/textio.hpp"

namespace actmon {

namespace {

std::string join(const std::string& dir, const std::string& file) {
    return dir + "/" + file;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace

void ActivityModelBundle::save(const std::string& dir) const {
    ensure_dir(dir);
    save_model_file(model, join(dir, "activity_rf.txt"));
    write_file(join(dir, "mi_matrix.tsv"), mi.to_tsv());
    std::ostringstream meta;
    meta << "window " << window << '\n';
    meta << "min_run " << min_run << '\n';
    meta << "mi_mode " << (mi_mode == MiMode::per_instance ? "instances" : "types") << '\n';
    write_file(join(dir, "meta.txt"), meta.str());
}

ActivityModelBundle ActivityModelBundle::load(const std::string& dir) {
    ActivityModelBundle bundle;
    bundle.model = load_model_file(join(dir, "activity_rf.txt"));
    try {
        bundle.mi = MIMatrix::from_tsv(read_file(join(dir, "mi_matrix.tsv")));
        for (const auto& line : read_lines(join(dir, "meta.txt"))) {
            const auto fields = split_fields(line);
            if (fields.size() != 2) continue;
            if (fields[0] == "window") {
                bundle.window = static_cast<std::size_t>(parse_int(fields[1], "window"));
            } else if (fields[0] == "min_run") {
                bundle.min_run = static_cast<std::size_t>(parse_int(fields[1], "min_run"));
            } else if (fields[0] == "mi_mode") {
                bundle.mi_mode = fields[1] == "types" ? MiMode::per_type : MiMode::per_instance;
            }
        }
    } catch (const DataError& e) {
        throw CorruptModel("activity model bundle incomplete: " + std::string(e.what()));
    }
    return bundle;
}

void AnomalyModelBundle::save(const std::string& dir) const {
    ensure_dir(dir);
    save_model_file(model, join(dir, "anomaly_rf.txt"));
    std::string names;
    for (const auto& a : activities) names += a + "\n";
    write_file(join(dir, "activities.txt"), names);
    write_file(join(dir, "rules.txt"), rules.to_text());
}

AnomalyModelBundle AnomalyModelBundle::load(const std::string& dir) {
    AnomalyModelBundle bundle;
    bundle.model = load_model_file(join(dir, "anomaly_rf.txt"));
    try {
        for (const auto& line : read_lines(join(dir, "activities.txt"))) {
            if (!trim(line).empty()) bundle.activities.emplace_back(trim(line));
        }
        bundle.rules = AnomalyRules::from_text(read_file(join(dir, "rules.txt")));
    } catch (const DataError& e) {
        throw CorruptModel("anomaly model bundle incomplete: " + std::string(e.what()));
    }
    return bundle;
}

Dataset dataset_subset(const Dataset& data, std::span<const std::size_t> rows) {
    Dataset out;
    out.schema = data.schema;
    out.classes = data.classes;
    out.x.reserve(rows.size() * data.d());
    out.y.reserve(rows.size());
    for (std::size_t r : rows) {
        const auto row = data.row(r);
        out.x.insert(out.x.end(), row.begin(), row.end());
        out.y.push_back(data.y[r]);
    }
    return out;
}

WindowTable build_window_table(const std::string& log_path, const MIMatrix* reuse_mi,
                               std::size_t window, MiMode mode) {
    WindowTable out;
    out.ds = parse_dataset_file(log_path);
    const auto labels = label_events(out.ds);
    out.mi = reuse_mi != nullptr ? *reuse_mi : compute_mi_matrix(out.ds, mode);
    const auto windows = make_windows(out.ds.events.size(), labels, window);

    std::vector<std::vector<double>> rows;
    std::vector<std::string> window_labels;
    rows.reserve(windows.size());
    window_labels.reserve(windows.size());
    VectorizeStats stats;
    for (const auto& w : windows) {
        rows.push_back(vectorize_window(out.ds.events, w, out.mi, &stats));
        window_labels.push_back(w.label);
    }
    out.table = make_dataset(window_feature_schema(out.mi.sensors), rows, window_labels);
    return out;
}

PredictedStream predict_event_labels(const EventDataset& ds, const ActivityModelBundle& bundle) {
    if (ds.events.size() < bundle.window) {
        throw StreamTooShort("stream shorter than one window");
    }
    PredictedStream out;
    const std::size_t n = ds.events.size() - bundle.window + 1;
    out.times.reserve(n);
    out.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Window w{i, bundle.window, ""};
        const auto row = vectorize_window(ds.events, w, bundle.mi);
        const auto pred = predict(bundle.model, row);
        out.times.push_back(ds.events[i + bundle.window - 1].timestamp);
        out.labels.push_back(bundle.model.classes[pred.class_index]);
    }
    return out;
}

void cmd_parse(const ParseCmd& opt, std::ostream& out) {
    const auto ds = parse_dataset_file(opt.log);
    if (!opt.events_out.empty()) {
        std::string text;
        for (const auto& line : serialize_dataset(ds)) text += line + "\n";
        write_file(opt.events_out, text);
    }
    const auto report = ds.report.to_text();
    if (!opt.report_out.empty()) write_file(opt.report_out, report);
    out << report;
    out << "sensors " << ds.sensor_registry.size() << "\n";
    out << "segments " << ds.segments.size() << "\n";
}

void cmd_mi(const MiCmd& opt, std::ostream& out) {
    const auto ds = parse_dataset_file(opt.log);
    const auto mi = compute_mi_matrix(ds, opt.mode);
    write_file(opt.out_path, mi.to_tsv());
    out << "mi matrix " << mi.sensors.size() << "x" << mi.sensors.size() << " -> " << opt.out_path
        << "\n";
}

void cmd_synth(const SynthCmd& opt, std::ostream& out) {
    const auto scenario = SynthScenario::from_file(opt.scenario);
    const auto lines = synth_generate(scenario, opt.seed);
    std::string text;
    for (const auto& line : lines) text += line + "\n";
    write_file(opt.out_path, text);
    out << "synth events " << lines.size() << " days " << scenario.days << " -> " << opt.out_path
        << "\n";
}

namespace {

struct EvalArtifacts {
    EvalReport report;
};

// Vote-share score matrix and prediction indices for a row subset.
EvalArtifacts evaluate_subset(const RandomForestModel& model, const Dataset& data,
                              std::span<const std::size_t> rows) {
    std::vector<std::size_t> y_true, y_pred;
    std::vector<double> scores;
    y_true.reserve(rows.size());
    y_pred.reserve(rows.size());
    scores.reserve(rows.size() * data.classes.size());
    for (std::size_t r : rows) {
        const auto pred = predict(model, data.row(r));
        y_true.push_back(data.y[r]);
        y_pred.push_back(pred.class_index);
        scores.insert(scores.end(), pred.vote_shares.begin(), pred.vote_shares.end());
    }
    EvalArtifacts out;
    out.report = evaluate(y_true, y_pred, scores, data.classes);
    return out;
}

TrainTestSplit make_split(const Dataset& data, const PipelineConfig& config) {
    if (config.chronological) return split_chronological(data.n(), config.split_ratio);
    return split_train_test(data.n(), config.split_ratio, config.seed,
                            config.stratified ? std::span<const std::size_t>(data.y)
                                              : std::span<const std::size_t>{});
}

void write_eval_outputs(const EvalReport& report, const std::string& report_out,
                        const std::string& roc_out) {
    if (!report_out.empty()) write_file(report_out, report.to_kv());
    if (!roc_out.empty()) write_file(roc_out, report.roc_tsv());
}

}  // namespace

void cmd_train_activity(const TrainActivityCmd& opt, std::ostream& out) {
    auto wt = build_window_table(opt.log, nullptr, opt.config.window, opt.config.mi_mode);
    const auto split = make_split(wt.table, opt.config);
    const auto train = dataset_subset(wt.table, split.train);

    auto model = fit_forest(train, opt.config.activity_rf);

    const auto eval = evaluate_subset(model, wt.table, split.test);
    out << "trained activity model: " << model.trees.size() << " trees, " << train.n()
        << " train windows, " << split.test.size() << " test windows\n";
    out << eval.report.to_table();
    write_eval_outputs(eval.report, opt.report_out, "");

    if (!opt.importance_out.empty()) {
        std::vector<double> scores;
        if (opt.importance_class.empty()) {
            scores = feature_importances(model);
        } else {
            const auto c = model.class_index(opt.importance_class);
            if (c == RandomForestModel::npos) {
                throw DataError("class not in model: " + opt.importance_class);
            }
            scores = class_feature_importances(model, c);
        }
        write_file(opt.importance_out, importances_tsv(model.schema, scores));
    }

    ActivityModelBundle bundle;
    bundle.model = std::move(model);
    bundle.mi = std::move(wt.mi);
    bundle.window = opt.config.window;
    bundle.min_run = opt.config.min_run;
    bundle.mi_mode = opt.config.mi_mode;
    bundle.save(opt.out_dir);
}

namespace {

struct AnomalyTrainingData {
    DailyStats stats;
    AnomalyLabeling labeling;
    AnomalyRules rules;
    Dataset table;
};

AnomalyTrainingData prepare_anomaly_data(const std::string& log,
                                         const std::string& activity_model_dir,
                                         const PipelineConfig& config,
                                         const std::string& rules_path) {
    AnomalyTrainingData out;
    const auto ds = parse_dataset_file(log);
    std::vector<ActivityInstance> instances;
    if (activity_model_dir.empty()) {
        const auto labels = label_events(ds);
        std::vector<Timestamp> times;
        times.reserve(ds.events.size());
        for (const auto& e : ds.events) times.push_back(e.timestamp);
        instances = aggregate_instances(times, labels, config.min_run);
    } else {
        const auto bundle = ActivityModelBundle::load(activity_model_dir);
        const auto stream = predict_event_labels(ds, bundle);
        instances = aggregate_instances(stream.times, stream.labels, bundle.min_run);
    }
    out.stats = compute_daily_stats(std::move(instances));
    if (out.stats.instances.empty()) throw DataError("no activity instances in " + log);

    if (!rules_path.empty()) {
        out.rules = AnomalyRules::from_text(read_file(rules_path));
    } else {
        out.rules = default_time_ranges(out.stats, config.z_threshold);
    }
    out.labeling = label_anomalies(out.stats, out.rules);
    out.table = anomaly_dataset(out.stats, out.labeling);
    return out;
}

}  // namespace

void cmd_train_anomaly(const TrainAnomalyCmd& opt, std::ostream& out) {
    auto data = prepare_anomaly_data(opt.log, opt.activity_model_dir, opt.config,
                                     opt.config.rules_path);
    if (!opt.records_out.empty()) write_file(opt.records_out, records_to_csv(data.labeling));

    const auto split = make_split(data.table, opt.config);
    const auto train = dataset_subset(data.table, split.train);
    if (train.classes.size() < 2) {
        throw SingleClassTrainingSet("anomaly training set contains a single class");
    }
    auto model = train_anomaly_model(train, opt.config.anomaly_rf);

    std::size_t abnormal = 0;
    for (const auto& rec : data.labeling.records) abnormal += rec.abnormal ? 1 : 0;
    out << "trained anomaly model: " << model.trees.size() << " trees, "
        << data.labeling.records.size() << " instances (" << abnormal << " abnormal), "
        << split.test.size() << " held out\n";
    for (const auto& a : data.labeling.z_skipped_activities) {
        out << "note: z-rules skipped for " << a << " (fewer than 2 active days)\n";
    }
    const auto eval = evaluate_subset(model, data.table, split.test);
    out << eval.report.to_table();
    write_eval_outputs(eval.report, opt.report_out, opt.roc_out);

    if (!opt.importance_out.empty()) {
        write_file(opt.importance_out, importances_tsv(model.schema, feature_importances(model)));
    }

    AnomalyModelBundle bundle;
    bundle.model = std::move(model);
    bundle.activities = data.stats.activities;
    bundle.rules = data.rules;
    bundle.save(opt.out_dir);
}

namespace {

// Rows of an externally produced records CSV against a trained bundle.
Dataset records_table(const AnomalyLabeling& labeling, const AnomalyModelBundle& bundle) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    for (const auto& rec : labeling.records) {
        const auto it = std::lower_bound(bundle.activities.begin(), bundle.activities.end(),
                                         rec.activity);
        if (it == bundle.activities.end() || *it != rec.activity) {
            throw DataError("records contain an activity unknown to the model: " + rec.activity);
        }
        rows.push_back(rec.features(static_cast<std::size_t>(it - bundle.activities.begin())));
        labels.push_back(rec.abnormal ? "abnormal" : "normal");
    }
    return make_dataset(anomaly_feature_schema(), rows, labels);
}

}  // namespace

void cmd_eval(const EvalCmd& opt, std::ostream& out) {
    if (opt.task == "activity") {
        const auto bundle = ActivityModelBundle::load(opt.model_dir);
        auto wt = build_window_table(opt.log, &bundle.mi, bundle.window, bundle.mi_mode);

        // The window table's class list covers the log; predictions index the
        // model's class list. Evaluate over the union.
        std::vector<std::string> classes = bundle.model.classes;
        for (const auto& c : wt.table.classes) {
            if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
        }
        std::sort(classes.begin(), classes.end());
        const auto class_of = [&](const std::string& name) {
            return static_cast<std::size_t>(
                std::lower_bound(classes.begin(), classes.end(), name) - classes.begin());
        };

        std::vector<std::size_t> rows;
        if (opt.heldout_only) {
            const auto split = make_split(wt.table, opt.config);
            rows = split.test;
        } else {
            rows.resize(wt.table.n());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        }

        std::vector<std::size_t> y_true, y_pred;
        std::vector<double> scores;
        for (std::size_t r : rows) {
            const auto pred = predict(bundle.model, wt.table.row(r));
            y_true.push_back(class_of(wt.table.classes[wt.table.y[r]]));
            y_pred.push_back(class_of(bundle.model.classes[pred.class_index]));
            std::vector<double> row_scores(classes.size(), 0.0);
            for (std::size_t k = 0; k < bundle.model.classes.size(); ++k) {
                row_scores[class_of(bundle.model.classes[k])] = pred.vote_shares[k];
            }
            scores.insert(scores.end(), row_scores.begin(), row_scores.end());
        }
        const auto report = evaluate(y_true, y_pred, scores, classes);
        out << report.to_table();
        write_eval_outputs(report, opt.report_out, opt.roc_out);
        return;
    }
    if (opt.task == "anomaly") {
        const auto bundle = AnomalyModelBundle::load(opt.model_dir);
        const auto labeling = records_from_csv(read_file(opt.records));
        const auto table = records_table(labeling, bundle);
        std::vector<std::size_t> rows;
        if (opt.heldout_only) {
            const auto split = make_split(table, opt.config);
            rows = split.test;
        } else {
            rows.resize(table.n());
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        }
        const auto eval = evaluate_subset(bundle.model, table, rows);
        out << eval.report.to_table();
        write_eval_outputs(eval.report, opt.report_out, opt.roc_out);
        return;
    }
    throw InvalidConfig("eval task must be 'activity' or 'anomaly'");
}

namespace {

DailySeries series_for_forecast(const TrainForecastCmd& opt) {
    if (!opt.series.empty()) return series_from_csv(read_file(opt.series));
    if (opt.log.empty() || opt.activity.empty()) {
        throw InvalidConfig("train-forecast needs --series, or --log with --activity");
    }
    const auto ds = parse_dataset_file(opt.log);
    std::vector<ActivityInstance> instances;
    if (opt.activity_model_dir.empty()) {
        const auto labels = label_events(ds);
        std::vector<Timestamp> times;
        for (const auto& e : ds.events) times.push_back(e.timestamp);
        instances = aggregate_instances(times, labels, opt.config.min_run);
    } else {
        const auto bundle = ActivityModelBundle::load(opt.activity_model_dir);
        const auto stream = predict_event_labels(ds, bundle);
        instances = aggregate_instances(stream.times, stream.labels, bundle.min_run);
    }
    const auto stats = compute_daily_stats(std::move(instances));
    return extract_daily_series(stats, opt.activity, opt.metric);
}

}  // namespace

void cmd_train_forecast(const TrainForecastCmd& opt, std::ostream& out) {
    const auto series = series_for_forecast(opt);
    TrainReport report;
    const auto model = train_forecaster(series, opt.config.lstm, &report);
    save_forecaster_file(model, opt.out_path);
    out << "trained forecaster: " << series.values.size() << " days, " << report.train_windows
        << " train windows, " << report.test_windows << " test windows\n";
    out << "final train mse (scaled) " << fmt_g17(report.final_train_loss) << "\n";
    if (report.degenerate_scale) out << "warning: constant training series, scale degenerate\n";
    if (report.test_windows > 0) {
        const auto skill = evaluate_forecaster(model, series);
        out << "heldout mse " << fmt_g17(skill.model_mse) << " persistence mse "
            << fmt_g17(skill.persistence_mse) << "\n";
    }
}

void cmd_forecast(const ForecastCmd& opt, std::ostream& out) {
    const auto model = load_forecaster_file(opt.model_path);
    const auto series = series_from_csv(read_file(opt.series));
    if (series.values.size() < model.config.lookback) {
        throw SeriesTooShort("history shorter than the model lookback");
    }
    const std::span<const double> recent(series.values.data() + series.values.size() -
                                             model.config.lookback,
                                         model.config.lookback);
    const auto history_stats = population_stats(series.values);
    const DeviationCheck check{history_stats.mean, history_stats.stddev, opt.z_threshold};
    const auto result = forecast(model, recent, check);

    std::ostringstream body;
    body << "day\tpredicted\tflag\n";
    const std::int64_t next_day = series.first_day + static_cast<std::int64_t>(series.values.size());
    for (std::size_t j = 0; j < result.values.size(); ++j) {
        const auto date = civil_from_days(next_day + static_cast<std::int64_t>(j));
        body << format_date(date) << '\t' << fmt_g17(result.values[j]) << '\t'
             << (result.deviation_flags[j] ? 1 : 0) << '\n';
    }
    if (!opt.out_path.empty()) write_file(opt.out_path, body.str());
    out << body.str();

    if (opt.emit_alerts) {
        for (std::size_t j = 0; j < result.values.size(); ++j) {
            if (!result.deviation_flags[j]) continue;
            const std::int64_t d = next_day + static_cast<std::int64_t>(j);
            Alert alert;
            alert.emitted_at = Timestamp{d * kMicrosPerDay};
            alert.kind = "forecast_risk";
            alert.activity = "";
            alert.detail = "day=" + format_date(civil_from_days(d)) +
                           "|predicted=" + fmt_fixed(result.values[j], 3) +
                           "|z=" + fmt_fixed(zscore(result.values[j], history_stats.mean,
                                                    history_stats.stddev),
                                             3);
            alert.vote_share = 1.0;
            out << alert.to_line() << '\n';
        }
    }
}

void cmd_replay(const ReplayCmd& opt, std::ostream& out) {
    const auto activity = ActivityModelBundle::load(opt.activity_model_dir);
    const auto anomaly = AnomalyModelBundle::load(opt.anomaly_model_dir);
    const auto ds = parse_dataset_file(opt.log);

    ReplayOptions options;
    options.window = activity.window;
    options.min_run = activity.min_run;
    options.speed = opt.speed;

    if (opt.alerts_out.empty()) {
        replay_stream(ds, activity.model, activity.mi, anomaly.model, anomaly.activities, options,
                      out);
    } else {
        std::ofstream file(opt.alerts_out, std::ios::binary);
        if (!file) throw DataError("cannot write " + opt.alerts_out);
        const auto summary = replay_stream(ds, activity.model, activity.mi, anomaly.model,
                                           anomaly.activities, options, file);
        out << summary.to_line() << "\n";
    }
}

}  // namespace actmon
