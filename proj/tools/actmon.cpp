// actmon: smart-home activity monitoring pipeline CLI.
//
// Subcommands: parse, mi, synth, train-activity, train-anomaly,
// train-forecast, eval, forecast, replay.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 model error.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "actmon/errors.hpp"
#include "actmon/pipeline.hpp"

namespace {

using namespace actmon;

struct CommonConfig {
    std::string config_path;
    // CLI overrides; negative = keep config value.
    long long window = -1;
    long long seed = -1;
    long long trees = -1;
    long long max_depth = -2;  // -2 keep, -1 unbounded
    long long epochs = -1;
    double split_ratio = -1.0;
    double z_threshold = -1.0;
    bool stratified = false;
    bool chronological = false;

    PipelineConfig resolve() const {
        PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : PipelineConfig::from_file(config_path);
        if (window >= 0) cfg.window = static_cast<std::size_t>(window);
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (trees >= 0) {
            cfg.activity_rf.n_trees = static_cast<std::size_t>(trees);
            cfg.anomaly_rf.n_trees = static_cast<std::size_t>(trees);
        }
        if (max_depth == -1) {
            cfg.activity_rf.max_depth = kUnboundedDepth;
            cfg.anomaly_rf.max_depth = kUnboundedDepth;
        } else if (max_depth >= 0) {
            cfg.activity_rf.max_depth = static_cast<std::size_t>(max_depth);
            cfg.anomaly_rf.max_depth = static_cast<std::size_t>(max_depth);
        }
        if (epochs >= 0) cfg.lstm.epochs = static_cast<std::size_t>(epochs);
        if (split_ratio > 0.0) cfg.split_ratio = split_ratio;
        if (z_threshold > 0.0) cfg.z_threshold = z_threshold;
        if (stratified) cfg.stratified = true;
        if (chronological) cfg.chronological = true;
        cfg.activity_rf.seed = cfg.seed;
        cfg.anomaly_rf.seed = cfg.seed + 1;
        cfg.lstm.seed = cfg.seed + 2;
        cfg.lstm.train_ratio = cfg.split_ratio;
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonConfig& common) {
    cmd->add_option("--config", common.config_path, "pipeline config file");
    cmd->add_option("--seed", common.seed, "pipeline seed");
    cmd->add_option("--window", common.window, "window size (events)");
    cmd->add_option("--trees", common.trees, "forest size");
    cmd->add_option("--max-depth", common.max_depth, "tree depth cap (-1 = unbounded)");
    cmd->add_option("--epochs", common.epochs, "forecaster training epochs");
    cmd->add_option("--ratio", common.split_ratio, "train fraction of the split");
    cmd->add_option("--z-threshold", common.z_threshold, "anomaly z-score threshold");
    cmd->add_flag("--stratified", common.stratified, "stratify the random split by class");
    cmd->add_flag("--chronological", common.chronological, "split by time instead of shuffling");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smart-home activity monitoring pipeline"};
    app.require_subcommand(1);

    CommonConfig common;

    ParseCmd parse_opt;
    auto* parse_cmd = app.add_subcommand("parse", "parse a CASAS log and print the parse report");
    parse_cmd->add_option("--log", parse_opt.log, "input log file")->required();
    parse_cmd->add_option("--events-out", parse_opt.events_out, "write normalized events here");
    parse_cmd->add_option("--report-out", parse_opt.report_out, "write the parse report here");

    MiCmd mi_opt;
    std::string mi_mode = "instances";
    auto* mi_cmd = app.add_subcommand("mi", "compute the sensor mutual-information matrix");
    mi_cmd->add_option("--log", mi_opt.log, "input log file")->required();
    mi_cmd->add_option("--out", mi_opt.out_path, "matrix TSV output path")->required();
    mi_cmd->add_option("--mode", mi_mode, "instances | types");

    SynthCmd synth_opt;
    auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic log");
    synth_cmd->add_option("--scenario", synth_opt.scenario, "scenario file")->required();
    synth_cmd->add_option("--seed", synth_opt.seed, "generator seed")->required();
    synth_cmd->add_option("--out", synth_opt.out_path, "log output path")->required();

    TrainActivityCmd ta_opt;
    auto* ta_cmd = app.add_subcommand("train-activity", "train the activity-inference forest");
    ta_cmd->add_option("--log", ta_opt.log, "annotated training log")->required();
    ta_cmd->add_option("--out", ta_opt.out_dir, "model bundle directory")->required();
    ta_cmd->add_option("--report-out", ta_opt.report_out, "machine-readable eval report");
    ta_cmd->add_option("--importance-out", ta_opt.importance_out, "feature importance TSV");
    ta_cmd->add_option("--importance-class", ta_opt.importance_class,
                       "per-class importance instead of global");
    add_common(ta_cmd, common);

    TrainAnomalyCmd tn_opt;
    std::string tn_rules;
    auto* tn_cmd = app.add_subcommand("train-anomaly", "label instances and train the anomaly forest");
    tn_cmd->add_option("--log", tn_opt.log, "training log")->required();
    tn_cmd->add_option("--activity-model", tn_opt.activity_model_dir,
                       "activity bundle for predicted labels (omit to use annotations)");
    tn_cmd->add_option("--out", tn_opt.out_dir, "model bundle directory")->required();
    tn_cmd->add_option("--rules", tn_rules, "anomaly rules file (default: EDA time ranges)");
    tn_cmd->add_option("--report-out", tn_opt.report_out, "machine-readable eval report");
    tn_cmd->add_option("--records-out", tn_opt.records_out, "labeled records CSV");
    tn_cmd->add_option("--importance-out", tn_opt.importance_out, "feature importance TSV");
    tn_cmd->add_option("--roc-out", tn_opt.roc_out, "ROC points TSV");
    add_common(tn_cmd, common);

    EvalCmd eval_opt;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
    eval_cmd->add_option("--task", eval_opt.task, "activity | anomaly")->required();
    eval_cmd->add_option("--model", eval_opt.model_dir, "model bundle directory")->required();
    eval_cmd->add_option("--log", eval_opt.log, "annotated log (activity task)");
    eval_cmd->add_option("--records", eval_opt.records, "records CSV (anomaly task)");
    eval_cmd->add_flag("--heldout", eval_opt.heldout_only,
                       "score only the training split's held-out rows");
    eval_cmd->add_option("--report-out", eval_opt.report_out, "machine-readable report");
    eval_cmd->add_option("--roc-out", eval_opt.roc_out, "ROC points TSV");
    add_common(eval_cmd, common);

    TrainForecastCmd tf_opt;
    std::string tf_metric = "duration";
    auto* tf_cmd = app.add_subcommand("train-forecast", "train the daily-trend forecaster");
    tf_cmd->add_option("--series", tf_opt.series, "day,value CSV");
    tf_cmd->add_option("--log", tf_opt.log, "log to derive the series from");
    tf_cmd->add_option("--activity-model", tf_opt.activity_model_dir,
                       "activity bundle for predicted labels");
    tf_cmd->add_option("--activity", tf_opt.activity, "activity name (with --log)");
    tf_cmd->add_option("--metric", tf_metric, "duration | frequency");
    tf_cmd->add_option("--out", tf_opt.out_path, "model file")->required();
    add_common(tf_cmd, common);

    ForecastCmd fc_opt;
    auto* fc_cmd = app.add_subcommand("forecast", "forecast the next horizon days");
    fc_cmd->add_option("--model", fc_opt.model_path, "forecaster model file")->required();
    fc_cmd->add_option("--series", fc_opt.series, "history CSV")->required();
    fc_cmd->add_option("--out", fc_opt.out_path, "forecast TSV output");
    fc_cmd->add_option("--z-threshold", fc_opt.z_threshold, "deviation flag threshold");
    fc_cmd->add_flag("--alerts", fc_opt.emit_alerts, "emit forecast_risk alert lines");

    ReplayCmd rp_opt;
    auto* rp_cmd = app.add_subcommand("replay", "replay a stream and emit alerts");
    rp_cmd->add_option("--log", rp_opt.log, "event stream")->required();
    rp_cmd->add_option("--activity-model", rp_opt.activity_model_dir, "activity bundle")->required();
    rp_cmd->add_option("--anomaly-model", rp_opt.anomaly_model_dir, "anomaly bundle")->required();
    rp_cmd->add_option("--speed", rp_opt.speed,
                       "time dilation factor (0 = as fast as possible)");
    rp_cmd->add_option("--alerts-out", rp_opt.alerts_out, "alert stream file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*parse_cmd) cmd_parse(parse_opt, std::cout);
        if (*mi_cmd) {
            if (mi_mode != "instances" && mi_mode != "types") {
                throw InvalidConfig("--mode must be instances or types");
            }
            mi_opt.mode = mi_mode == "types" ? MiMode::per_type : MiMode::per_instance;
            cmd_mi(mi_opt, std::cout);
        }
        if (*synth_cmd) cmd_synth(synth_opt, std::cout);
        if (*ta_cmd) {
            ta_opt.config = common.resolve();
            cmd_train_activity(ta_opt, std::cout);
        }
        if (*tn_cmd) {
            tn_opt.config = common.resolve();
            if (!tn_rules.empty()) tn_opt.config.rules_path = tn_rules;
            cmd_train_anomaly(tn_opt, std::cout);
        }
        if (*eval_cmd) {
            eval_opt.config = common.resolve();
            cmd_eval(eval_opt, std::cout);
        }
        if (*tf_cmd) {
            if (tf_metric != "duration" && tf_metric != "frequency") {
                throw InvalidConfig("--metric must be duration or frequency");
            }
            tf_opt.metric = tf_metric == "frequency" ? SeriesMetric::frequency
                                                     : SeriesMetric::duration;
            tf_opt.config = common.resolve();
            cmd_train_forecast(tf_opt, std::cout);
        }
        if (*fc_cmd) cmd_forecast(fc_opt, std::cout);
        if (*rp_cmd) cmd_replay(rp_opt, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
