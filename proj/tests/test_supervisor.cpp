#include <doctest.h>

#include "feedarm/supervisor.hpp"

#include <json.hpp>

#include <map>
#include <sstream>

using namespace feedarm::supervisor;
using S = FeedingState;
using U = Signal;

namespace {

// The transition table as a literal list of edges; everything else self-loops,
// except the global u8 and u10 rules.
const std::map<std::pair<int, int>, int>& edges() {
    static const std::map<std::pair<int, int>, int> e{
        {{0, 0}, 1},   {{1, 11}, 2}, {{1, 10}, 10}, {{2, 1}, 3}, {{3, 2}, 4},  {{4, 3}, 5},
        {{4, 10}, 10}, {{5, 4}, 6},  {{6, 5}, 9},   {{9, 6}, 7}, {{9, 8}, 0},  {{10, 0}, 1},
        {{8, 0}, 0},
    };
    return e;
}

int oracle(int state, int signal) {
    if (signal == 7) {
        return 8;
    }
    if (state == 8) {
        return signal == 0 ? 0 : 8;
    }
    if (signal == 9) {
        return 0;
    }
    const auto it = edges().find({state, signal});
    return it == edges().end() ? state : it->second;
}

// Plain depth-first search over the oracle table, with the X7 pass-through to X4.
std::set<int> oracle_reach(int start) {
    std::set<int> seen{start};
    std::vector<int> stack{start};
    while (!stack.empty()) {
        const int s = stack.back();
        stack.pop_back();
        for (int u = 0; u < kNumInputSignals; ++u) {
            std::vector<int> hits{oracle(s, u)};
            if (hits[0] == 7) {
                hits.push_back(4);
            }
            for (int n : hits) {
                if (seen.insert(n).second) {
                    stack.push_back(n);
                }
            }
        }
    }
    return seen;
}

}  // namespace

TEST_CASE("exhaustive transition table") {
    int checked = 0;
    for (int s = 0; s < kNumStates; ++s) {
        for (int u = 0; u < kNumInputSignals; ++u) {
            CAPTURE(s);
            CAPTURE(u);
            CHECK(static_cast<int>(step(static_cast<S>(s), static_cast<U>(u))) == oracle(s, u));
            ++checked;
        }
    }
    CHECK(checked == 132);
}

TEST_CASE("named examples") {
    CHECK(step(S::X0, U::u1) == S::X1);
    CHECK(step(S::X5, U::u8) == S::X8);
    CHECK(step(S::X6, U::u3) == S::X6);
    CHECK(step(S::X7, U::RepeatComplete) == S::X4);
    CHECK(step(S::X8, U::u10) == S::X8);
    CHECK(step(S::X10, U::u10) == S::X0);
}

TEST_CASE("u8 dominates every state") {
    for (int s = 0; s < kNumStates; ++s) {
        CHECK(step(static_cast<S>(s), U::u8) == S::X8);
        const Trace t = run_sequence(static_cast<S>(s), {U::u8});
        CHECK(final_state(static_cast<S>(s), t) == S::X8);
        const auto r = reachable_states(static_cast<S>(s), {U::u8});
        CHECK(r == std::set<S>{static_cast<S>(s), S::X8});
    }
}

TEST_CASE("only u1 leaves the emergency stop") {
    for (int u = 0; u < kNumInputSignals; ++u) {
        const S n = step(S::X8, static_cast<U>(u));
        CHECK(n == (u == 0 ? S::X0 : S::X8));
    }
}

TEST_CASE("nominal cycle with one repeat") {
    const std::vector<U> sig{U::u1, U::p_found, U::u2, U::u3, U::u4, U::u5,
                             U::u6, U::u7,      U::u4, U::u5, U::u6, U::u9};
    const Trace t = run_sequence(S::X0, sig);
    REQUIRE(t.size() == sig.size() + 1);
    CHECK(final_state(S::X0, t) == S::X0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        CHECK(t[k].next == t[k + 1].state);
    }
    const std::vector<S> visited{S::X1, S::X2, S::X3, S::X4, S::X5, S::X6, S::X9,
                                 S::X7, S::X4, S::X5, S::X6, S::X9, S::X0};
    for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK(t[k].next == visited[k]);
    }
    CHECK(t[7].signal == U::u7);
    CHECK(t[8].signal == U::RepeatComplete);
    CHECK(t[8].t == t[7].t);
    CHECK(t[9].t == 8.0);
}

TEST_CASE("empty sequence") {
    const Trace t = run_sequence(S::X0, {});
    CHECK(t.empty());
    CHECK(final_state(S::X0, t) == S::X0);
}

TEST_CASE("reachability") {
    CHECK(reachable_states(S::X0).size() == 11);
    for (int s = 0; s < kNumStates; ++s) {
        const auto r = reachable_states(static_cast<S>(s));
        const auto o = oracle_reach(s);
        std::set<S> expected;
        for (int x : o) {
            expected.insert(static_cast<S>(x));
        }
        CHECK(r == expected);
        CHECK(r.count(S::X0) == 1);
    }
}

TEST_CASE("names round trip") {
    for (int s = 0; s < kNumStates; ++s) {
        const S st = static_cast<S>(s);
        CHECK(parse_state(state_name(st)) == st);
        CHECK_FALSE(state_label(st).empty());
    }
    for (int u = 0; u <= static_cast<int>(U::RepeatComplete); ++u) {
        CHECK(parse_signal(signal_name(static_cast<U>(u))) == static_cast<U>(u));
    }
    CHECK(state_label(S::X8) == "EmergencyStop");
    CHECK_FALSE(parse_state("X11").has_value());
    CHECK_FALSE(parse_signal("u12").has_value());
}

TEST_CASE("trace jsonl") {
    const Trace t = run_sequence(S::X5, {U::u8});
    CHECK(trace_row_json(t[0]) == R"({"t":0.0,"state":"X5","signal":"u8","next":"X8"})");
    std::ostringstream out;
    write_trace_jsonl(run_sequence(S::X0, {U::u1, U::u10}), out);
    std::istringstream in(out.str());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("t"));
        CHECK(j.contains("next"));
        ++n;
    }
    CHECK(n == 2);
}
