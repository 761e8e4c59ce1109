#include "feedarm/supervisor.hpp"

#include <json.hpp>

#include <array>
#include <deque>

namespace feedarm::supervisor {

namespace {

constexpr std::array<std::string_view, kNumStates> kStateNames{"X0", "X1", "X2", "X3", "X4", "X5",
                                                               "X6", "X7", "X8", "X9", "X10"};
constexpr std::array<std::string_view, kNumStates> kStateLabels{
    "Waiting", "ProductSearch", "ProductPositioning", "Grasp", "FaceSearch", "MoveToFace",
    "Feeding", "Repeat", "EmergencyStop", "AwaitConfirmation", "NoObjects"};
constexpr std::array<std::string_view, 13> kSignalNames{"u1", "u2", "u3", "u4", "u5", "u6", "u7",
                                                        "u8", "u9", "u10", "u11", "p_found", "repeat_complete"};

}  // namespace

std::string_view state_name(FeedingState s) {
    return kStateNames[static_cast<int>(s)];
}

std::string_view state_label(FeedingState s) {
    return kStateLabels[static_cast<int>(s)];
}

std::string_view signal_name(Signal u) {
    return kSignalNames[static_cast<int>(u)];
}

std::optional<FeedingState> parse_state(std::string_view name) {
    for (int i = 0; i < kNumStates; ++i) {
        if (kStateNames[i] == name) {
            return static_cast<FeedingState>(i);
        }
    }
    return std::nullopt;
}

std::optional<Signal> parse_signal(std::string_view name) {
    for (std::size_t i = 0; i < kSignalNames.size(); ++i) {
        if (kSignalNames[i] == name) {
            return static_cast<Signal>(i);
        }
    }
    return std::nullopt;
}

FeedingState step(FeedingState state, Signal signal) {
    using S = FeedingState;
    using U = Signal;
    if (signal == U::u8) {
        return S::X8;
    }
    if (state == S::X8) {
        return signal == U::u1 ? S::X0 : S::X8;
    }
    if (signal == U::u10) {
        return S::X0;
    }
    switch (state) {
    case S::X0:
        if (signal == U::u1) return S::X1;
        break;
    case S::X1:
        if (signal == U::p_found) return S::X2;
        if (signal == U::u11) return S::X10;
        break;
    case S::X2:
        if (signal == U::u2) return S::X3;
        break;
    case S::X3:
        if (signal == U::u3) return S::X4;
        break;
    case S::X4:
        if (signal == U::u4) return S::X5;
        if (signal == U::u11) return S::X10;
        break;
    case S::X5:
        if (signal == U::u5) return S::X6;
        break;
    case S::X6:
        if (signal == U::u6) return S::X9;
        break;
    case S::X7:
        if (signal == U::RepeatComplete) return S::X4;
        break;
    case S::X9:
        if (signal == U::u7) return S::X7;
        if (signal == U::u9) return S::X0;
        break;
    case S::X10:
        if (signal == U::u1) return S::X1;
        break;
    case S::X8:
        break;
    }
    return state;
}

FeedingState apply(FeedingState state, Signal signal, double t, Trace& trace) {
    FeedingState next = step(state, signal);
    trace.push_back({t, state, signal, next});
    if (next == FeedingState::X7 && state != FeedingState::X7) {
        const FeedingState after = step(next, Signal::RepeatComplete);
        trace.push_back({t, next, Signal::RepeatComplete, after});
        next = after;
    }
    return next;
}

Trace run_sequence(FeedingState start, const std::vector<Signal>& signals) {
    Trace trace;
    FeedingState s = start;
    for (std::size_t k = 0; k < signals.size(); ++k) {
        s = apply(s, signals[k], static_cast<double>(k), trace);
    }
    return trace;
}

FeedingState final_state(FeedingState start, const Trace& trace) {
    return trace.empty() ? start : trace.back().next;
}

std::set<FeedingState> reachable_states(FeedingState start, const std::vector<Signal>& alphabet) {
    std::vector<Signal> signals = alphabet;
    if (signals.empty()) {
        for (int i = 0; i < kNumInputSignals; ++i) {
            signals.push_back(static_cast<Signal>(i));
        }
    }
    std::set<FeedingState> seen{start};
    std::deque<FeedingState> frontier{start};
    while (!frontier.empty()) {
        const FeedingState s = frontier.front();
        frontier.pop_front();
        for (const Signal u : signals) {
            Trace scratch;
            apply(s, u, 0.0, scratch);
            // X7 is passed through on the way to X4 and counts as visited.
            for (const TraceRow& row : scratch) {
                if (seen.insert(row.next).second) {
                    frontier.push_back(row.next);
                }
            }
        }
    }
    return seen;
}

std::string trace_row_json(const TraceRow& row) {
    nlohmann::ordered_json j;
    j["t"] = row.t;
    j["state"] = state_name(row.state);
    j["signal"] = signal_name(row.signal);
    j["next"] = state_name(row.next);
    return j.dump();
}

void write_trace_jsonl(const Trace& trace, std::ostream& out) {
    for (const TraceRow& row : trace) {
        out << trace_row_json(row) << '\n';
    }
}

}  // namespace feedarm::supervisor
