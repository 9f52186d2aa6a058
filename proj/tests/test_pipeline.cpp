#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "actmon/config.hpp"
#include "actmon/errors.hpp"
#include "actmon/pipeline.hpp"
#include "actmon/rng.hpp"
#include "actmon/textio.hpp"
#include "doctest.h"

using namespace actmon;

namespace {

std::string temp_dir() {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("actmon_test_" + std::to_string(++counter));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

const std::string kTwoActivityScenario = R"(
days = 30
start_date = 2024-02-01
noise_sensors = X01
noise_events_per_day = 8
anomaly_rate = 0.06
anomaly_duration_factor = 6.0

[activity Cook]
start = 18:00
start_jitter_min = 25
duration_min = 45
duration_jitter_min = 10
events_per_min = 0.8
sensors = K01,K02,K03

[activity Hygiene]
start = 07:30
start_jitter_min = 20
duration_min = 30
duration_jitter_min = 6
events_per_min = 0.8
sensors = B01,B02
)";

}  // namespace

TEST_CASE("pipeline config: defaults, round trip, strict keys") {
    const auto cfg = PipelineConfig::from_text("");
    CHECK(cfg.window == 20);
    CHECK(cfg.seed == 42);
    CHECK(cfg.activity_rf.n_trees == 100);
    CHECK(cfg.activity_rf.max_depth == kUnboundedDepth);
    CHECK(cfg.lstm.hidden == 32);
    CHECK(cfg.lstm.epochs == 500);
    CHECK(cfg.lstm.lookback == 21);
    CHECK(cfg.lstm.horizon == 7);
    CHECK(cfg.z_threshold == 3.0);

    const auto cfg2 = PipelineConfig::from_text(cfg.to_text());
    CHECK(cfg2.to_text() == cfg.to_text());

    const auto custom = PipelineConfig::from_text(
        "window = 12\nseed = 9\nactivity_max_depth = 4\nanomaly_max_features = 3\n"
        "mi_mode = types\nstratified = true\n");
    CHECK(custom.window == 12);
    CHECK(custom.activity_rf.max_depth == 4);
    CHECK(custom.anomaly_rf.max_features == 3);
    CHECK(custom.mi_mode == MiMode::per_type);
    CHECK(custom.stratified);
    CHECK(custom.activity_rf.seed == 9);

    CHECK_THROWS_AS(PipelineConfig::from_text("wat = 1\n"), InvalidConfig);
    CHECK_THROWS_AS(PipelineConfig::from_text("window = 1\n"), InvalidConfig);
    CHECK_THROWS_AS(PipelineConfig::from_text("split_ratio = 1.5\n"), InvalidConfig);
    CHECK_THROWS_AS(PipelineConfig::from_text("window 20\n"), InvalidConfig);
}

TEST_CASE("scenario parsing validates its schema") {
    CHECK_THROWS_AS(SynthScenario::from_text("days = 5\n"), BadScenario);
    CHECK_THROWS_AS(SynthScenario::from_text("days = 5\n[activity A]\nsensors = M1\n"),
                    BadScenario);  // missing duration
    CHECK_THROWS_AS(SynthScenario::from_text(kTwoActivityScenario + "\nnope = 3\n"), BadScenario);

    const auto scenario = SynthScenario::from_text(kTwoActivityScenario);
    CHECK(scenario.days == 30);
    CHECK(scenario.activities.size() == 2);
    CHECK(scenario.activities[0].sensors.size() == 3);
    CHECK(scenario.activities[1].start_s == doctest::Approx(7 * 3600 + 30 * 60));
}

TEST_CASE("synth is reproducible and honors zero noise") {
    const auto scenario = SynthScenario::from_text(kTwoActivityScenario);
    const auto a = synth_generate(scenario, 4);
    const auto b = synth_generate(scenario, 4);
    CHECK(a == b);
    const auto c = synth_generate(scenario, 5);
    CHECK(a != c);

    auto quiet = scenario;
    quiet.noise_events_per_day = 0.0;
    const auto lines = synth_generate(quiet, 4);
    const auto ds = parse_dataset(lines);
    const auto labels = label_events(ds);
    for (const auto& label : labels) CHECK(label != kOtherActivity);
}

TEST_CASE("streaming instance assembly matches the batch aggregation") {
    Rng rng(55);
    const std::vector<std::string> names{"A", "B", std::string(kOtherActivity)};
    for (int iter = 0; iter < 60; ++iter) {
        std::vector<std::string> labels;
        std::vector<Timestamp> times;
        const std::size_t n = 1 + rng.bounded(60);
        std::int64_t t = days_from_civil({2024, 1, 1}) * kMicrosPerDay;
        for (std::size_t i = 0; i < n; ++i) {
            t += static_cast<std::int64_t>(rng.bounded(4 * kMicrosPerDay / 10)) + 1;
            times.push_back(Timestamp{t});
            labels.push_back(names[rng.bounded(names.size())]);
        }
        const std::size_t min_run = 1 + rng.bounded(3);
        const auto batch = aggregate_instances(times, labels, min_run);

        InstanceAssembler assembler(min_run);
        std::vector<ActivityInstance> streamed;
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& inst : assembler.feed(times[i], labels[i])) streamed.push_back(inst);
        }
        for (auto& inst : assembler.finish()) streamed.push_back(inst);
        CHECK(streamed == batch);
    }
}

TEST_CASE("alert lines have a fixed field order") {
    Alert alert;
    alert.emitted_at = *parse_timestamp("2024-02-03", "04:05:06.5");
    alert.kind = "abnormal_activity";
    alert.activity = "Cook";
    alert.detail = "duration_s=120.000|seq=2";
    alert.vote_share = 0.875;
    CHECK(alert.to_line() ==
          "emitted_at=2024-02-03T04:05:06.5 kind=abnormal_activity activity=Cook "
          "detail=duration_s=120.000|seq=2 vote_share=0.875000");
}

TEST_CASE("full pipeline: synth, train both models, eval, replay") {
    const auto dir = temp_dir();
    const auto path = [&](const std::string& name) { return dir + "/" + name; };
    write_file(path("scenario.txt"), kTwoActivityScenario);

    std::ostringstream sink;
    cmd_synth({path("scenario.txt"), 11, path("log.txt")}, sink);

    PipelineConfig config;
    config.window = 12;
    config.seed = 3;
    config.activity_rf.n_trees = 40;
    config.anomaly_rf.n_trees = 60;
    config.activity_rf.seed = config.seed;
    config.anomaly_rf.seed = config.seed + 1;

    TrainActivityCmd ta;
    ta.log = path("log.txt");
    ta.out_dir = path("am");
    ta.config = config;
    ta.report_out = path("activity_report.txt");
    ta.importance_out = path("activity_importance.tsv");
    cmd_train_activity(ta, sink);
    CHECK(std::filesystem::exists(path("am/activity_rf.txt")));
    CHECK(std::filesystem::exists(path("am/mi_matrix.tsv")));

    // Reported accuracy on the 2-activity disjoint-signature log is >= 0.99.
    double accuracy = -1.0;
    for (const auto& line : read_lines(path("activity_report.txt"))) {
        const auto fields = split_fields(line);
        if (fields.size() == 2 && fields[0] == "accuracy") {
            accuracy = parse_double(fields[1], "accuracy");
        }
    }
    CHECK(accuracy >= 0.99);

    TrainAnomalyCmd tn;
    tn.log = path("log.txt");
    tn.activity_model_dir = path("am");
    tn.out_dir = path("nm");
    tn.config = config;
    tn.records_out = path("records.csv");
    tn.report_out = path("anomaly_report.txt");
    tn.roc_out = path("roc.tsv");
    cmd_train_anomaly(tn, sink);
    CHECK(std::filesystem::exists(path("nm/anomaly_rf.txt")));
    CHECK(std::filesystem::exists(path("nm/activities.txt")));
    CHECK(std::filesystem::exists(path("nm/rules.txt")));

    EvalCmd ev;
    ev.task = "anomaly";
    ev.model_dir = path("nm");
    ev.records = path("records.csv");
    ev.config = config;
    std::ostringstream eval_out;
    cmd_eval(ev, eval_out);
    CHECK(eval_out.str().find("accuracy") != std::string::npos);

    // eval --heldout re-derives the training split: its accuracy matches the
    // value train-activity reported for the same model and log.
    EvalCmd ev2;
    ev2.task = "activity";
    ev2.model_dir = path("am");
    ev2.log = path("log.txt");
    ev2.config = config;
    ev2.heldout_only = true;
    ev2.report_out = path("heldout_report.txt");
    std::ostringstream heldout_out;
    cmd_eval(ev2, heldout_out);
    double train_acc = -1.0, heldout_acc = -2.0;
    for (const auto& line : read_lines(path("activity_report.txt"))) {
        const auto fields = split_fields(line);
        if (fields.size() == 2 && fields[0] == "accuracy") train_acc = parse_double(fields[1], "a");
    }
    for (const auto& line : read_lines(path("heldout_report.txt"))) {
        const auto fields = split_fields(line);
        if (fields.size() == 2 && fields[0] == "accuracy") heldout_acc = parse_double(fields[1], "a");
    }
    CHECK(train_acc == heldout_acc);

    // Per-class importance export for one activity.
    TrainActivityCmd ta2 = ta;
    ta2.out_dir = path("am2");
    ta2.importance_out = path("cook_importance.tsv");
    ta2.importance_class = "Cook";
    cmd_train_activity(ta2, sink);
    const auto imp = read_lines(path("cook_importance.tsv"));
    REQUIRE(imp.size() >= 2);
    CHECK(imp[0] == "feature\tscore");

    ReplayCmd rp;
    rp.log = path("log.txt");
    rp.activity_model_dir = path("am");
    rp.anomaly_model_dir = path("nm");
    rp.alerts_out = path("alerts1.txt");
    cmd_replay(rp, sink);
    rp.alerts_out = path("alerts2.txt");
    cmd_replay(rp, sink);
    CHECK(read_file(path("alerts1.txt")) == read_file(path("alerts2.txt")));

    const auto alerts = read_lines(path("alerts1.txt"));
    REQUIRE(!alerts.empty());
    CHECK(alerts.back().starts_with("summary events="));

    // Alerts are ordered by emission time.
    std::string prev;
    for (const auto& line : alerts) {
        if (!line.starts_with("emitted_at=")) continue;
        const auto stamp = std::string(split_fields(line)[0].substr(11));
        if (!prev.empty()) CHECK(prev <= stamp);  // ISO order = lexicographic
        prev = stamp;
    }

    std::filesystem::remove_all(dir);
}

TEST_CASE("replay on an anomaly-free stream raises no alerts") {
    const auto dir = temp_dir();
    const auto path = [&](const std::string& name) { return dir + "/" + name; };

    // Train on data with anomalies, rules restricted to duration z-scores.
    write_file(path("scenario.txt"), kTwoActivityScenario);
    write_file(path("rules.txt"), "z_threshold 3\n");
    std::ostringstream sink;
    cmd_synth({path("scenario.txt"), 21, path("train_log.txt")}, sink);

    PipelineConfig config;
    config.window = 12;
    config.seed = 6;
    config.activity_rf.n_trees = 40;
    config.anomaly_rf.n_trees = 60;
    config.rules_path = path("rules.txt");

    TrainActivityCmd ta;
    ta.log = path("train_log.txt");
    ta.out_dir = path("am");
    ta.config = config;
    cmd_train_activity(ta, sink);

    TrainAnomalyCmd tn;
    tn.log = path("train_log.txt");
    tn.activity_model_dir = path("am");
    tn.out_dir = path("nm");
    tn.config = config;
    cmd_train_anomaly(tn, sink);

    // Fresh stream with the anomaly injector off.
    auto scenario = SynthScenario::from_text(kTwoActivityScenario);
    scenario.anomaly_rate = 0.0;
    std::string clean;
    for (const auto& line : synth_generate(scenario, 77)) clean += line + "\n";
    write_file(path("clean_log.txt"), clean);

    ReplayCmd rp;
    rp.log = path("clean_log.txt");
    rp.activity_model_dir = path("am");
    rp.anomaly_model_dir = path("nm");
    rp.alerts_out = path("alerts.txt");
    cmd_replay(rp, sink);

    const auto alerts = read_lines(path("alerts.txt"));
    REQUIRE(alerts.size() == 1);  // summary only
    CHECK(alerts[0].find("alerts=0") != std::string::npos);

    std::filesystem::remove_all(dir);
}

namespace {

// One Cook instance a day from K-sensors, with stray unlabeled X01 events in
// between so consecutive days do not fuse into one run; day `inject_day`
// cooks 10x longer.
std::string scripted_cook_log(int days, int inject_day) {
    std::ostringstream os;
    Rng rng(321);
    const std::int64_t base = days_from_civil({2024, 5, 1}) * kMicrosPerDay;
    for (int d = 0; d < days; ++d) {
        const std::int64_t midnight = base + d * kMicrosPerDay;
        for (const int hour : {2, 4, 6, 10, 14}) {
            os << format_timestamp(Timestamp{midnight + hour * 3600 * kMicrosPerSecond})
               << " X01 ON\n";
        }
        const double duration = d == inject_day ? 24000.0 : 2400.0;
        const std::int64_t start = midnight + 18 * 3600 * kMicrosPerSecond;
        const int inner = static_cast<int>(duration / 120.0) - 1;
        const auto sensor = [&] { return "K0" + std::to_string(1 + rng.bounded(3)); };
        os << format_timestamp(Timestamp{start}) << ' ' << sensor() << " ON Cook begin\n";
        for (int k = 1; k <= inner; ++k) {
            const auto t = start + static_cast<std::int64_t>(k * 120.0 * kMicrosPerSecond);
            os << format_timestamp(Timestamp{t}) << ' ' << sensor() << " ON\n";
        }
        const auto end = start + static_cast<std::int64_t>(duration * kMicrosPerSecond);
        os << format_timestamp(Timestamp{end}) << ' ' << sensor() << " OFF Cook end\n";
    }
    return os.str();
}

}  // namespace

TEST_CASE("replay flags exactly the injected long instance") {
    const auto dir = temp_dir();
    const auto path = [&](const std::string& name) { return dir + "/" + name; };
    write_file(path("log.txt"), scripted_cook_log(35, 17));
    write_file(path("rules.txt"), "z_threshold 3\n");

    // Oracle: the batch labeling rules mark exactly one instance abnormal.
    const auto ds = parse_dataset_file(path("log.txt"));
    const auto labels = label_events(ds);
    std::vector<Timestamp> times;
    for (const auto& e : ds.events) times.push_back(e.timestamp);
    const auto stats = compute_daily_stats(aggregate_instances(times, labels, 2));
    const auto labeling = label_anomalies(stats, AnomalyRules::from_text("z_threshold 3\n"));
    std::size_t abnormal = 0;
    for (const auto& rec : labeling.records) abnormal += rec.abnormal ? 1 : 0;
    REQUIRE(abnormal == 1);

    PipelineConfig config;
    config.window = 8;
    config.seed = 12;
    config.activity_rf.n_trees = 20;
    config.activity_rf.seed = 12;
    config.anomaly_rf.n_trees = 40;
    config.anomaly_rf.seed = 13;
    config.rules_path = path("rules.txt");

    std::ostringstream sink;
    TrainActivityCmd ta;
    ta.log = path("log.txt");
    ta.out_dir = path("am");
    ta.config = config;
    cmd_train_activity(ta, sink);

    TrainAnomalyCmd tn;
    tn.log = path("log.txt");
    tn.activity_model_dir = path("am");
    tn.out_dir = path("nm");
    tn.config = config;
    cmd_train_anomaly(tn, sink);

    ReplayCmd rp;
    rp.log = path("log.txt");
    rp.activity_model_dir = path("am");
    rp.anomaly_model_dir = path("nm");
    rp.alerts_out = path("alerts.txt");
    cmd_replay(rp, sink);

    const auto alerts = read_lines(path("alerts.txt"));
    REQUIRE(alerts.size() == 2);  // one alert + summary
    CHECK(alerts[0].find("kind=abnormal_activity") != std::string::npos);
    CHECK(alerts[0].find("activity=Cook") != std::string::npos);
    CHECK(alerts[0].find("2024-05-18") != std::string::npos);  // day 17 from 2024-05-01
    CHECK(alerts[1].find("alerts=1") != std::string::npos);

    std::filesystem::remove_all(dir);
}

#ifdef ACTMON_BIN
TEST_CASE("CLI exit codes: 0 ok, 1 usage, 2 data, 3 model") {
    const auto dir = temp_dir();
    const auto run = [&](const std::string& args) {
        const auto cmd = std::string(ACTMON_BIN) + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    write_file(dir + "/tiny.txt", "2024-01-01 08:00:00 M1 ON\n2024-01-01 08:00:01 M1 OFF\n");
    CHECK(run("parse --log " + dir + "/tiny.txt") == 0);
    CHECK(run("bogus-subcommand") == 1);
    CHECK(run("parse") == 1);                              // missing required option
    CHECK(run("parse --log " + dir + "/absent.txt") == 2);  // unreadable data
    CHECK(run("mi --log " + dir + "/tiny.txt --out " + dir + "/mi.tsv") == 2);  // no segments
    CHECK(run("replay --log " + dir + "/tiny.txt --activity-model " + dir +
              "/nope --anomaly-model " + dir + "/nope") == 3);  // missing model
    std::filesystem::remove_all(dir);
}
#endif

TEST_CASE("kv section parser handles sections, comments and errors") {
    const auto sections = parse_kv_sections("a = 1\n# note\n[activity Cook]\nstart = 18:00\n");
    REQUIRE(sections.size() == 2);
    CHECK(sections[0].entries.size() == 1);
    CHECK(sections[1].name == "activity");
    CHECK(sections[1].arg == "Cook");
    CHECK(sections[1].entries[0].first == "start");

    CHECK_THROWS_AS(parse_kv_sections("[unterminated\n"), InvalidConfig);
    CHECK_THROWS_AS(parse_kv_sections("novalue\n"), InvalidConfig);
}

TEST_CASE("eval rejects unknown tasks") {
    EvalCmd ev;
    ev.task = "nonsense";
    std::ostringstream sink;
    CHECK_THROWS_AS(cmd_eval(ev, sink), InvalidConfig);
}
