#include "actmon/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "actmon/errors.hpp"
#include "actmon/kernels.hpp"
#include "actmon/textio.hpp"

namespace actmon {

namespace {

struct Run {
    std::string label;
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t count() const { return last - first + 1; }
};

}  // namespace

std::vector<ActivityInstance> aggregate_instances(std::span<const Timestamp> times,
                                                  std::span<const std::string> labels,
                                                  std::size_t min_run) {
    if (times.size() != labels.size()) throw LengthMismatch("times/labels size mismatch");

    std::vector<Run> runs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!runs.empty() && runs.back().label == labels[i]) {
            runs.back().last = i;
        } else {
            runs.push_back({labels[i], i, i});
        }
    }

    struct Tentative {
        std::string label;
        Timestamp start;
        Timestamp end;
        std::size_t count = 0;
    };
    std::vector<Tentative> tentative;
    for (const auto& run : runs) {
        if (run.label == kOtherActivity) continue;
        if (run.count() < min_run && !tentative.empty() && tentative.back().label == run.label) {
            tentative.back().end = times[run.last];
            tentative.back().count += run.count();
        } else {
            tentative.push_back({run.label, times[run.first], times[run.last], run.count()});
        }
    }

    std::vector<ActivityInstance> instances;
    std::unordered_map<std::int64_t, std::size_t> day_counter;
    for (const auto& t : tentative) {
        if (t.count < min_run) continue;
        ActivityInstance inst;
        inst.activity = t.label;
        inst.start = t.start;
        inst.end = t.end;
        inst.duration_s = seconds_between(t.start, t.end);
        inst.day = day_index(t.start);
        inst.sequence_index = day_counter[inst.day]++;
        inst.event_count = t.count;
        instances.push_back(std::move(inst));
    }
    return instances;
}

std::size_t DailyStats::frequency(std::int64_t day, std::string_view activity) const {
    std::size_t n = 0;
    for (const auto& inst : instances) {
        if (inst.day == day && inst.activity == activity) ++n;
    }
    return n;
}

std::size_t DailyStats::activity_code(std::string_view activity) const {
    const auto it = std::lower_bound(activities.begin(), activities.end(), activity);
    if (it == activities.end() || *it != activity) {
        throw DataError("unknown activity: " + std::string(activity));
    }
    return static_cast<std::size_t>(it - activities.begin());
}

DailyStats compute_daily_stats(std::vector<ActivityInstance> instances) {
    DailyStats stats;
    stats.instances = std::move(instances);
    std::set<std::string> names;
    for (std::size_t i = 0; i < stats.instances.size(); ++i) {
        const auto& inst = stats.instances[i];
        names.insert(inst.activity);
        if (i == 0 || inst.day < stats.first_day) stats.first_day = inst.day;
        if (i == 0 || inst.day > stats.last_day) stats.last_day = inst.day;
    }
    stats.activities.assign(names.begin(), names.end());
    return stats;
}

MeanStd population_stats(std::span<const double> values) {
    MeanStd out;
    out.n = values.size();
    if (out.n == 0) return out;
    const auto& ops = kern::active();
    out.mean = ops.sum(values.data(), values.size()) / static_cast<double>(values.size());
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = values[i] - out.mean;
    out.stddev = std::sqrt(ops.sum_sq(dev.data(), dev.size()) / static_cast<double>(dev.size()));
    return out;
}

double zscore(double value, double mean, double stddev) {
    if (stddev <= 0.0) return 0.0;
    return (value - mean) / stddev;
}

TimeWindow circular_percentile_band(std::vector<double> points, double p_lo, double p_hi) {
    if (points.empty()) throw DataError("cannot take percentiles of an empty sample");
    const auto day = static_cast<double>(kSecondsPerDay);
    std::sort(points.begin(), points.end());
    const std::size_t n = points.size();

    // Cut the circle at the widest empty arc.
    std::size_t cut = 0;  // index of the first point after the cut
    double widest = points.front() + day - points.back();
    for (std::size_t i = 1; i < n; ++i) {
        const double gap = points[i] - points[i - 1];
        if (gap > widest) {
            widest = gap;
            cut = i;
        }
    }
    // Nearest rank along the unrolled order, returning the original sample
    // value (no wrap arithmetic, so endpoints stay bit-exact).
    const auto rank = [&](double p) {
        auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
        if (idx < 1) idx = 1;
        if (idx > n) idx = n;
        return points[(cut + idx - 1) % n];
    };
    TimeWindow w;
    w.lo = rank(p_lo);
    w.hi = rank(p_hi);
    return w;
}

double AnomalyRules::threshold_for(std::string_view activity) const {
    const auto it = windows.find(std::string(activity));
    if (it != windows.end() && it->second.z_threshold) return *it->second.z_threshold;
    return z_threshold;
}

std::string AnomalyRules::to_text() const {
    std::ostringstream os;
    os << "z_threshold " << fmt_g17(z_threshold) << '\n';
    for (const auto& [activity, rule] : windows) {
        os << "window " << activity << ' ' << fmt_g17(rule.start_window.lo) << ' '
           << fmt_g17(rule.start_window.hi) << ' ' << fmt_g17(rule.end_window.lo) << ' '
           << fmt_g17(rule.end_window.hi);
        if (rule.z_threshold) os << ' ' << fmt_g17(*rule.z_threshold);
        os << '\n';
    }
    return os.str();
}

AnomalyRules AnomalyRules::from_text(const std::string& text) {
    AnomalyRules rules;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto fields = split_fields(t);
        if (fields[0] == "z_threshold" && fields.size() == 2) {
            rules.z_threshold = parse_double(fields[1], "z_threshold");
            if (rules.z_threshold <= 0.0) throw InvalidConfig("z_threshold must be positive");
        } else if (fields[0] == "window" && (fields.size() == 6 || fields.size() == 7)) {
            ActivityRule rule;
            rule.start_window.lo = parse_double(fields[2], "start window lo");
            rule.start_window.hi = parse_double(fields[3], "start window hi");
            rule.end_window.lo = parse_double(fields[4], "end window lo");
            rule.end_window.hi = parse_double(fields[5], "end window hi");
            if (fields.size() == 7) rule.z_threshold = parse_double(fields[6], "window z override");
            const auto day = static_cast<double>(kSecondsPerDay);
            if (rule.start_window.lo < 0 || rule.start_window.lo >= day) {
                throw InvalidConfig("window start must lie in [0, 86400)");
            }
            rules.windows[std::string(fields[1])] = rule;
        } else {
            throw InvalidConfig("rules file line " + std::to_string(line_no) +
                                " unrecognized: " + line);
        }
    }
    return rules;
}

AnomalyRules default_time_ranges(const DailyStats& stats, double z_threshold) {
    AnomalyRules rules;
    rules.z_threshold = z_threshold;
    for (const auto& activity : stats.activities) {
        std::vector<double> starts, ends;
        for (const auto& inst : stats.instances) {
            if (inst.activity != activity) continue;
            starts.push_back(seconds_since_midnight(inst.start));
            ends.push_back(seconds_since_midnight(inst.end));
        }
        ActivityRule rule;
        rule.start_window = circular_percentile_band(starts, 0.01, 0.99);
        rule.end_window = circular_percentile_band(ends, 0.01, 0.99);
        rules.windows[activity] = rule;
    }
    return rules;
}

std::string_view anomaly_reason_name(AnomalyReason r) {
    switch (r) {
        case AnomalyReason::freq_z: return "freq_z";
        case AnomalyReason::span_z: return "span_z";
        case AnomalyReason::start_range: return "start_range";
        case AnomalyReason::end_range: return "end_range";
    }
    return "?";
}

std::vector<double> AnomalyRecord::features(std::size_t activity_code) const {
    return {static_cast<double>(activity_code), start_s, end_s, duration_s,
            static_cast<double>(sequence_index)};
}

AnomalyLabeling label_anomalies(const DailyStats& stats, const AnomalyRules& rules) {
    AnomalyLabeling out;
    if (stats.instances.empty()) return out;

    struct ActivityContext {
        bool z_enabled = false;
        MeanStd duration;
        std::unordered_map<std::int64_t, double> freq_z_by_day;
    };
    std::unordered_map<std::string, ActivityContext> context;

    for (const auto& activity : stats.activities) {
        ActivityContext ctx;
        std::vector<double> durations;
        std::set<std::int64_t> active_days;
        std::unordered_map<std::int64_t, double> freq;
        for (const auto& inst : stats.instances) {
            if (inst.activity != activity) continue;
            durations.push_back(inst.duration_s);
            active_days.insert(inst.day);
            freq[inst.day] += 1.0;
        }
        if (active_days.size() < 2) {
            out.z_skipped_activities.push_back(activity);
        } else {
            ctx.z_enabled = true;
            ctx.duration = population_stats(durations);
            std::vector<double> daily;
            daily.reserve(stats.n_days());
            for (std::int64_t d = stats.first_day; d <= stats.last_day; ++d) {
                const auto it = freq.find(d);
                daily.push_back(it == freq.end() ? 0.0 : it->second);
            }
            const auto freq_stats = population_stats(daily);
            for (std::int64_t d = stats.first_day; d <= stats.last_day; ++d) {
                const auto it = freq.find(d);
                const double f = it == freq.end() ? 0.0 : it->second;
                ctx.freq_z_by_day[d] = zscore(f, freq_stats.mean, freq_stats.stddev);
            }
        }
        context[activity] = std::move(ctx);
    }

    for (const auto& inst : stats.instances) {
        AnomalyRecord rec;
        rec.activity = inst.activity;
        rec.day = inst.day;
        rec.start_s = seconds_since_midnight(inst.start);
        rec.end_s = seconds_since_midnight(inst.end);
        rec.duration_s = inst.duration_s;
        rec.sequence_index = inst.sequence_index;

        const auto& ctx = context[inst.activity];
        const double threshold = rules.threshold_for(inst.activity);
        if (ctx.z_enabled) {
            if (std::abs(ctx.freq_z_by_day.at(inst.day)) > threshold) {
                rec.reasons.push_back(AnomalyReason::freq_z);
            }
            const double span_z = zscore(inst.duration_s, ctx.duration.mean, ctx.duration.stddev);
            if (std::abs(span_z) > threshold) rec.reasons.push_back(AnomalyReason::span_z);
        }
        const auto rule_it = rules.windows.find(inst.activity);
        if (rule_it != rules.windows.end()) {
            if (!rule_it->second.start_window.contains(rec.start_s)) {
                rec.reasons.push_back(AnomalyReason::start_range);
            }
            if (!rule_it->second.end_window.contains(rec.end_s)) {
                rec.reasons.push_back(AnomalyReason::end_range);
            }
        }
        rec.abnormal = !rec.reasons.empty();
        out.records.push_back(std::move(rec));
    }
    return out;
}

FeatureSchema anomaly_feature_schema() {
    FeatureSchema schema;
    schema.names = {"activity_type", "start_s", "end_s", "duration_s", "sequence_index"};
    schema.kinds = {FeatureKind::categorical, FeatureKind::numeric, FeatureKind::numeric,
                    FeatureKind::numeric, FeatureKind::numeric};
    return schema;
}

Dataset anomaly_dataset(const DailyStats& stats, const AnomalyLabeling& labeling) {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    for (const auto& rec : labeling.records) {
        rows.push_back(rec.features(stats.activity_code(rec.activity)));
        labels.push_back(rec.abnormal ? "abnormal" : "normal");
    }
    return make_dataset(anomaly_feature_schema(), rows, labels);
}

RandomForestModel train_anomaly_model(const Dataset& records, const ForestConfig& config) {
    if (records.classes.size() < 2) {
        throw SingleClassTrainingSet("anomaly training set contains a single class");
    }
    return fit_forest(records, config);
}

DetectResult detect(const RandomForestModel& model, std::span<const double> features) {
    const auto pred = predict(model, features);
    DetectResult out;
    out.label = model.classes[pred.class_index];
    out.vote_share = pred.vote_shares[pred.class_index];
    out.vote_shares = pred.vote_shares;
    return out;
}

namespace {

std::string reasons_to_text(const std::vector<AnomalyReason>& reasons) {
    std::string out;
    for (const auto r : reasons) {
        if (!out.empty()) out += '|';
        out += anomaly_reason_name(r);
    }
    return out;
}

std::vector<AnomalyReason> reasons_from_text(std::string_view text) {
    std::vector<AnomalyReason> out;
    if (text.empty()) return out;
    for (const auto part : split_on(text, '|')) {
        if (part == "freq_z") out.push_back(AnomalyReason::freq_z);
        else if (part == "span_z") out.push_back(AnomalyReason::span_z);
        else if (part == "start_range") out.push_back(AnomalyReason::start_range);
        else if (part == "end_range") out.push_back(AnomalyReason::end_range);
        else throw DataError("unknown anomaly reason: " + std::string(part));
    }
    return out;
}

}  // namespace

std::string records_to_csv(const AnomalyLabeling& labeling) {
    std::ostringstream os;
    os << "activity,day,start_s,end_s,duration_s,sequence_index,label,reasons\n";
    for (const auto& rec : labeling.records) {
        os << rec.activity << ',' << format_date(civil_from_days(rec.day)) << ','
           << fmt_g17(rec.start_s) << ',' << fmt_g17(rec.end_s) << ',' << fmt_g17(rec.duration_s)
           << ',' << rec.sequence_index << ',' << (rec.abnormal ? "abnormal" : "normal") << ','
           << reasons_to_text(rec.reasons) << '\n';
    }
    return os.str();
}

AnomalyLabeling records_from_csv(const std::string& text) {
    AnomalyLabeling out;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) ||
        trim(line) != "activity,day,start_s,end_s,duration_s,sequence_index,label,reasons") {
        throw DataError("bad anomaly records header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_on(trim(line), ',');
        if (fields.size() != 8) {
            throw DataError("records line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields");
        }
        AnomalyRecord rec;
        rec.activity = std::string(fields[0]);
        const auto date = parse_date(fields[1]);
        if (!date) throw DataError("bad date on line " + std::to_string(line_no));
        rec.day = days_from_civil(*date);
        rec.start_s = parse_double(fields[2], "start_s");
        rec.end_s = parse_double(fields[3], "end_s");
        rec.duration_s = parse_double(fields[4], "duration_s");
        rec.sequence_index = static_cast<std::size_t>(parse_int(fields[5], "sequence_index"));
        if (fields[6] == "abnormal") {
            rec.abnormal = true;
        } else if (fields[6] == "normal") {
            rec.abnormal = false;
        } else {
            throw DataError("bad label on line " + std::to_string(line_no));
        }
        rec.reasons = reasons_from_text(fields[7]);
        out.records.push_back(std::move(rec));
    }
    return out;
}

DailySeries extract_daily_series(const DailyStats& stats, std::string_view activity,
                                 SeriesMetric metric) {
    DailySeries series;
    series.first_day = stats.first_day;
    series.values.assign(stats.n_days(), 0.0);
    for (const auto& inst : stats.instances) {
        if (inst.activity != activity) continue;
        auto& slot = series.values[static_cast<std::size_t>(inst.day - stats.first_day)];
        slot += metric == SeriesMetric::duration ? inst.duration_s : 1.0;
    }
    return series;
}

std::string series_to_csv(const DailySeries& series) {
    std::ostringstream os;
    os << "day,value\n";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        os << format_date(civil_from_days(series.first_day + static_cast<std::int64_t>(i))) << ','
           << fmt_g17(series.values[i]) << '\n';
    }
    return os.str();
}

DailySeries series_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "day,value") {
        throw DataError("bad series header, expected 'day,value'");
    }
    std::map<std::int64_t, double> by_day;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_on(trim(line), ',');
        if (fields.size() != 2) {
            throw DataError("series line " + std::to_string(line_no) + " malformed");
        }
        const auto date = parse_date(fields[0]);
        if (!date) throw DataError("bad date on series line " + std::to_string(line_no));
        by_day[days_from_civil(*date)] = parse_double(fields[1], "series value");
    }
    if (by_day.empty()) throw DataError("series file has no rows");
    DailySeries series;
    series.first_day = by_day.begin()->first;
    series.values.assign(static_cast<std::size_t>(by_day.rbegin()->first - series.first_day + 1),
                         0.0);
    for (const auto& [day, value] : by_day) {
        series.values[static_cast<std::size_t>(day - series.first_day)] = value;
    }
    return series;
}

}  // namespace actmon
