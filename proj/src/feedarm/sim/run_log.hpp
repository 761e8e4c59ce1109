#pragma once

#include "feedarm/sim/world.hpp"

#include <optional>
#include <ostream>
#include <string>

namespace feedarm::sim {

/// One WorldState as a single-line JSON object. With `with_tail` the recent
/// event history is included as "event_tail" (used by the live service).
std::string snapshot_json(const WorldState& w, bool with_tail = false);

struct RunSummary {
    std::string scenario;
    long ticks = 0;
    double t_end = 0.0;
    supervisor::FeedingState final_state = supervisor::FeedingState::X0;
    std::optional<double> first_feeding_t;  // first entry into X6
    std::optional<double> min_servo_error;
    double max_payload_static = 0.0;
    double max_payload_dynamic = 0.0;
    double payload = 0.0;
    int warnings = 0;
    int faults = 0;
};

std::string summary_json(const RunSummary& s);

/// Runs round(duration / dt) ticks, writing one snapshot line per tick to `run`
/// and one trace row per supervisor step to `trace`.
RunSummary run_headless(const Scenario& scenario, double duration, std::ostream& run, std::ostream& trace);

/// Same, into <out_dir>/run.jsonl, trace.jsonl and summary.json. Throws Error{IoError}.
RunSummary run_headless(const Scenario& scenario, double duration, const std::string& out_dir);

}  // namespace feedarm::sim
