#include "feedarm/sim/run_log.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace feedarm::sim {

using json = nlohmann::ordered_json;

namespace {

json event_json(const Event& e) {
    return {{"t", e.t}, {"kind", e.kind}, {"message", e.message}};
}

template <typename T>
json steps_json(const T& a) {
    json out = json::array();
    for (const auto& x : a) {
        out.push_back(x);
    }
    return out;
}

}  // namespace

std::string snapshot_json(const WorldState& w, bool with_tail) {
    json j;
    j["tick"] = w.tick;
    j["t"] = w.t;
    j["state"] = supervisor::state_name(w.state);
    j["q"] = steps_json(w.q.q);
    j["motor_steps"] = steps_json(w.motor_steps);
    j["joint_steps"] = steps_json(w.joint_steps);
    j["target_steps"] = steps_json(w.target_steps);
    const auto& d = w.detection;
    j["detection"] = {{"found", d.found},       {"x_offset", d.x_offset}, {"y_offset", d.y_offset},
                      {"distance", d.distance}, {"box_w", d.box_w},       {"box_h", d.box_h}};
    j["servo_error"] = w.servo_error ? json(*w.servo_error) : json(nullptr);
    json events = json::array();
    for (const Event& e : w.events) {
        events.push_back(event_json(e));
    }
    j["events"] = std::move(events);
    if (with_tail) {
        json tail = json::array();
        for (const Event& e : w.event_tail) {
            tail.push_back(event_json(e));
        }
        j["event_tail"] = std::move(tail);
    }
    return j.dump();
}

std::string summary_json(const RunSummary& s) {
    json j;
    j["scenario"] = s.scenario;
    j["ticks"] = s.ticks;
    j["t_end"] = s.t_end;
    j["final_state"] = supervisor::state_name(s.final_state);
    j["first_feeding_t"] = s.first_feeding_t ? json(*s.first_feeding_t) : json(nullptr);
    j["min_servo_error"] = s.min_servo_error ? json(*s.min_servo_error) : json(nullptr);
    j["payload"] = {{"commanded_n", s.payload},
                    {"max_static_n", s.max_payload_static},
                    {"max_dynamic_n", s.max_payload_dynamic}};
    j["warnings"] = s.warnings;
    j["faults"] = s.faults;
    return j.dump(2) + "\n";
}

RunSummary run_headless(const Scenario& scenario, double duration, std::ostream& run, std::ostream& trace) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw Error(ErrorCode::InvalidArgument, "duration must be positive");
    }
    Simulator sim(scenario);
    const long ticks = std::max(1L, static_cast<long>(std::llround(duration / scenario.dt)));

    RunSummary summary;
    summary.scenario = scenario.name;
    for (long k = 0; k < ticks; ++k) {
        const auto rows = sim.tick();
        run << snapshot_json(sim.state()) << '\n';
        supervisor::write_trace_jsonl(rows, trace);
        for (const Event& e : sim.state().events) {
            summary.warnings += e.kind == "warning";
            summary.faults += e.kind == "fault";
        }
    }
    summary.ticks = ticks;
    summary.t_end = sim.state().t;
    summary.final_state = sim.state().state;
    summary.first_feeding_t = sim.first_time_in(supervisor::FeedingState::X6);
    if (std::isfinite(sim.min_servo_error())) {
        summary.min_servo_error = sim.min_servo_error();
    }
    summary.max_payload_static = dynamics::max_payload_static(scenario.links).payload;
    summary.max_payload_dynamic = dynamics::max_payload_dynamic(scenario.links).payload;
    summary.payload = scenario.payload_n;
    return summary;
}

RunSummary run_headless(const Scenario& scenario, double duration, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());
    }
    const fs::path dir(out_dir);
    std::ofstream run(dir / "run.jsonl");
    std::ofstream trace(dir / "trace.jsonl");
    if (!run || !trace) {
        throw Error(ErrorCode::IoError, "cannot open log files in " + out_dir);
    }
    const RunSummary summary = run_headless(scenario, duration, run, trace);
    std::ofstream sum(dir / "summary.json");
    sum << summary_json(summary);
    run.flush();
    trace.flush();
    if (!run || !trace || !sum) {
        throw Error(ErrorCode::IoError, "write failed in " + out_dir);
    }
    return summary;
}

}  // namespace feedarm::sim
