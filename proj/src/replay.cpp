#include "actmon/replay.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>

#include "actmon/errors.hpp"
#include "actmon/textio.hpp"

namespace actmon {

std::string format_timestamp_compact(Timestamp t) {
    auto s = format_timestamp(t);
    const auto space = s.find(' ');
    s[space] = 'T';
    return s;
}

std::string Alert::to_line() const {
    std::ostringstream os;
    os << "emitted_at=" << format_timestamp_compact(emitted_at) << " kind=" << kind
       << " activity=" << activity << " detail=" << detail
       << " vote_share=" << fmt_fixed(vote_share, 6);
    return os.str();
}

std::string ReplaySummary::to_line() const {
    std::ostringstream os;
    os << "summary events=" << events << " windows=" << windows << " instances=" << instances
       << " alerts=" << alerts;
    return os.str();
}

std::vector<ActivityInstance> InstanceAssembler::feed(Timestamp time, const std::string& label) {
    std::vector<ActivityInstance> done;
    if (run_ && run_->label == label) {
        run_->end = time;
        run_->count += 1;
        return done;
    }
    done = close_run();
    run_ = Pending{label, time, time, 1};
    return done;
}

std::vector<ActivityInstance> InstanceAssembler::close_run() {
    std::vector<ActivityInstance> done;
    if (!run_) return done;
    const Pending run = *run_;
    run_.reset();
    if (run.label == kOtherActivity) return done;

    if (run.count < min_run_ && tentative_ && tentative_->label == run.label) {
        tentative_->end = run.end;
        tentative_->count += run.count;
        return done;
    }
    if (tentative_) {
        if (auto inst = finalize(*tentative_)) done.push_back(std::move(*inst));
    }
    tentative_ = run;
    return done;
}

std::vector<ActivityInstance> InstanceAssembler::finish() {
    auto done = close_run();
    if (tentative_) {
        if (auto inst = finalize(*tentative_)) done.push_back(std::move(*inst));
        tentative_.reset();
    }
    return done;
}

std::optional<ActivityInstance> InstanceAssembler::finalize(const Pending& p) {
    if (p.count < min_run_) return std::nullopt;
    ActivityInstance inst;
    inst.activity = p.label;
    inst.start = p.start;
    inst.end = p.end;
    inst.duration_s = seconds_between(p.start, p.end);
    inst.day = day_index(p.start);
    inst.sequence_index = day_counter_[inst.day]++;
    inst.event_count = p.count;
    return inst;
}

ReplaySummary replay_stream(const EventDataset& ds, const RandomForestModel& activity_model,
                            const MIMatrix& mi, const RandomForestModel& anomaly_model,
                            const std::vector<std::string>& anomaly_activities,
                            const ReplayOptions& options, std::ostream& alerts_out) {
    if (ds.events.size() < options.window) {
        throw StreamTooShort("replay needs at least " + std::to_string(options.window) + " events");
    }

    ReplaySummary summary;
    summary.events = ds.events.size();
    InstanceAssembler assembler(options.min_run);

    const auto activity_code = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::lower_bound(anomaly_activities.begin(), anomaly_activities.end(), name);
        if (it == anomaly_activities.end() || *it != name) return std::nullopt;
        return static_cast<std::size_t>(it - anomaly_activities.begin());
    };

    const auto handle_instance = [&](const ActivityInstance& inst, Timestamp now) {
        ++summary.instances;
        const auto code = activity_code(inst.activity);
        if (!code) return;  // activity unseen by the anomaly model; nothing to score
        AnomalyRecord rec;
        rec.start_s = seconds_since_midnight(inst.start);
        rec.end_s = seconds_since_midnight(inst.end);
        rec.duration_s = inst.duration_s;
        rec.sequence_index = inst.sequence_index;
        const auto result = detect(anomaly_model, rec.features(*code));
        if (result.label != "abnormal") return;
        Alert alert;
        alert.emitted_at = now;
        alert.kind = "abnormal_activity";
        alert.activity = inst.activity;
        alert.detail = "start=" + format_timestamp_compact(inst.start) +
                       "|end=" + format_timestamp_compact(inst.end) +
                       "|duration_s=" + fmt_fixed(inst.duration_s, 3) +
                       "|seq=" + std::to_string(inst.sequence_index);
        alert.vote_share = result.vote_share;
        alerts_out << alert.to_line() << '\n';
        ++summary.alerts;
    };

    std::optional<Timestamp> prev_time;
    for (std::size_t i = 0; i < ds.events.size(); ++i) {
        const auto& event = ds.events[i];
        if (options.speed > 0.0 && prev_time) {
            const double dt = seconds_between(*prev_time, event.timestamp) / options.speed;
            if (dt > 0.0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(dt));
            }
        }
        prev_time = event.timestamp;

        if (i + 1 < options.window) continue;
        Window w;
        w.begin = i + 1 - options.window;
        w.size = options.window;
        const auto row = vectorize_window(ds.events, w, mi);
        ++summary.windows;
        const auto pred = predict(activity_model, row);
        for (auto& inst : assembler.feed(event.timestamp, activity_model.classes[pred.class_index])) {
            handle_instance(inst, event.timestamp);
        }
    }
    if (!ds.events.empty()) {
        for (auto& inst : assembler.finish()) {
            handle_instance(inst, ds.events.back().timestamp);
        }
    }
    alerts_out << summary.to_line() << '\n';
    return summary;
}

}  // namespace actmon
