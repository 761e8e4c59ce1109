#pragma once

#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace feedarm::supervisor {

enum class FeedingState {
    X0 = 0,  // Waiting
    X1,      // ProductSearch
    X2,      // ProductPositioning
    X3,      // Grasp
    X4,      // FaceSearch
    X5,      // MoveToFace
    X6,      // Feeding
    X7,      // Repeat
    X8,      // EmergencyStop
    X9,      // AwaitConfirmation
    X10,     // NoObjects
};

enum class Signal {
    u1 = 0,  // Start
    u2,      // PositioningDone
    u3,      // GraspConfirmed
    u4,      // FaceAcquired
    u5,      // FeedPoseReached
    u6,      // FeedingDone
    u7,      // RepeatRequest
    u8,      // EmergencyStop
    u9,      // ConfirmWait
    u10,     // PauseStop
    u11,     // SearchFailed
    p_found,         // product acquired (internal)
    RepeatComplete,  // emitted on entering X7 (internal)
};

constexpr int kNumStates = 11;
// External signals u1..u11 plus p_found; RepeatComplete is only ever self-emitted.
constexpr int kNumInputSignals = 12;

std::string_view state_name(FeedingState s);
std::string_view state_label(FeedingState s);
std::string_view signal_name(Signal u);
std::optional<FeedingState> parse_state(std::string_view name);
std::optional<Signal> parse_signal(std::string_view name);

/// Transition table lookup; pairs not in the table leave the state unchanged.
FeedingState step(FeedingState state, Signal signal);

struct TraceRow {
    double t = 0.0;
    FeedingState state = FeedingState::X0;
    Signal signal = Signal::u1;
    FeedingState next = FeedingState::X0;
};

using Trace = std::vector<TraceRow>;

/// Applies a signal and, when it lands in X7, the follow-up RepeatComplete row.
/// Rows are appended to `trace` stamped with `t`; returns the final state.
FeedingState apply(FeedingState state, Signal signal, double t, Trace& trace);

/// Folds `apply` over the signals; row k is stamped t = k.
Trace run_sequence(FeedingState start, const std::vector<Signal>& signals);

FeedingState final_state(FeedingState start, const Trace& trace);

/// Breadth-first closure over `alphabet` (every input signal when empty).
std::set<FeedingState> reachable_states(FeedingState start, const std::vector<Signal>& alphabet = {});

/// One JSON object per line: {"t":..,"state":"X5","signal":"u8","next":"X8"}.
std::string trace_row_json(const TraceRow& row);
void write_trace_jsonl(const Trace& trace, std::ostream& out);

}  // namespace feedarm::supervisor
