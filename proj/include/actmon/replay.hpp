#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "actmon/analytics.hpp"
#include "actmon/forest.hpp"
#include "actmon/ingest.hpp"
#include "actmon/windowing.hpp"

namespace actmon {

struct Alert {
    Timestamp emitted_at;
    std::string kind;  // abnormal_activity | forecast_risk
    std::string activity;
    std::string detail;      // pipe-separated key=value pairs, no spaces
    double vote_share = 0.0;

    // One line, fixed field order:
    //   emitted_at=<ts> kind=<kind> activity=<name> detail=<detail> vote_share=<0.xxxxxx>
    std::string to_line() const;
};

// "YYYY-MM-DDTHH:MM:SS[.ffffff]" (no space, for embedding in alert fields).
std::string format_timestamp_compact(Timestamp t);

// Streaming mirror of aggregate_instances: feed labeled events in order,
// collect finalized instances. An instance finalizes once a later run can no
// longer merge into it, so emission order equals batch order.
class InstanceAssembler {
public:
    explicit InstanceAssembler(std::size_t min_run) : min_run_(min_run) {}

    // Returns the instances finalized by consuming this event.
    std::vector<ActivityInstance> feed(Timestamp time, const std::string& label);
    std::vector<ActivityInstance> finish();

private:
    struct Pending {
        std::string label;
        Timestamp start;
        Timestamp end;
        std::size_t count = 0;
    };

    std::vector<ActivityInstance> close_run();
    std::optional<ActivityInstance> finalize(const Pending& p);

    std::size_t min_run_;
    std::optional<Pending> run_;        // current label run
    std::optional<Pending> tentative_;  // last mergeable instance
    std::map<std::int64_t, std::size_t> day_counter_;
};

struct ReplayOptions {
    std::size_t window = 20;
    std::size_t min_run = 2;
    double speed = 0.0;  // wall-clock dilation divisor; 0 = as fast as possible
};

struct ReplaySummary {
    std::size_t events = 0;
    std::size_t windows = 0;
    std::size_t instances = 0;
    std::size_t alerts = 0;

    std::string to_line() const;
};

// Consumes the stream in timestamp order: classifies each event's trailing
// window, assembles closed runs into instances, runs the anomaly detector on
// each, and writes one alert line per abnormal instance.
ReplaySummary replay_stream(const EventDataset& ds, const RandomForestModel& activity_model,
                            const MIMatrix& mi, const RandomForestModel& anomaly_model,
                            const std::vector<std::string>& anomaly_activities,
                            const ReplayOptions& options, std::ostream& alerts_out);

}  // namespace actmon
