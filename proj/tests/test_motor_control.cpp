#include <doctest.h>

#include "feedarm/motor_control.hpp"
#include "feedarm/rng.hpp"

#include <random>
#include <sstream>

using namespace feedarm;
using namespace feedarm::motor;

TEST_CASE("plant step response matches the first-order solution") {
    const MotorPlant p;
    const double dt = 1e-5;
    MotorPlant s = p;
    const double tau = p.J / p.b;
    const double gain = p.K / p.b;
    for (int k = 1; k <= 20000; ++k) {
        s = plant_step(s, 1.0, dt);
        if (k % 5000 == 0) {
            const double t = k * dt;
            CHECK(s.velocity == doctest::Approx(gain * (1.0 - std::exp(-t / tau))).epsilon(1e-3));
        }
    }
    CHECK(gain == doctest::Approx(4.0 / 3.0));
    CHECK(tau == doctest::Approx(0.0666667).epsilon(1e-5));
}

TEST_CASE("plant angle integrates the new velocity") {
    MotorPlant p;
    p.velocity = 2.0;
    const MotorPlant n = plant_step(p, 0.0, 0.01);
    CHECK(n.velocity == doctest::Approx(2.0 - 0.01 * 0.75 * 2.0 / 0.05));
    CHECK(n.angle == doctest::Approx(0.01 * n.velocity));
}

TEST_CASE("cascade step by hand") {
    CascadeGains g;
    const CascadeOutput o = cascade_step(g, 1.0, 0.25, 0.5, 0.001, CascadeState{});
    const double e = 0.75;
    const double ipos = e * 0.001;
    const double vref = 120.0 * e + 10.0 * ipos - 500.0 * 0.5;
    const double ev = vref - 0.5;
    CHECK(o.velocity_ref == doctest::Approx(vref));
    CHECK(o.state.pos_integral == doctest::Approx(ipos));
    CHECK(o.command == doctest::Approx(20.0 * ev + 30.0 * ev * 0.001));
}

TEST_CASE("integrator contributions are clamped") {
    CascadeGains g;
    CascadeState s;
    for (int k = 0; k < 1000; ++k) {
        s = cascade_step(g, 100.0, 0.0, 0.0, 1.0, s).state;
    }
    CHECK(g.Ki1 * s.pos_integral == doctest::Approx(g.integrator_limit));
    CHECK(g.Ki2 * s.vel_integral == doctest::Approx(g.integrator_limit));
}

TEST_CASE("derived characteristics formulas") {
    const DerivedCharacteristics d = derived_characteristics(CascadeGains{});
    CHECK(d.omega_n == doctest::Approx(std::sqrt(20.0)));
    CHECK(d.zeta == doctest::Approx(30.0 / (2.0 * std::sqrt(20.0))));
    CHECK(d.J == doctest::Approx(1.0 / 20.0));
    CHECK(d.b == doctest::Approx(2.0 * d.zeta * d.omega_n / 20.0));
}

TEST_CASE("closed loop settles on the reference") {
    const auto rows = simulate_cascade(CascadeGains{}, MotorPlant{}, 1.0, 60.0, 4e-6, 250000);
    REQUIRE(rows.size() > 2);
    CHECK(rows.back().t == doctest::Approx(60.0));
    CHECK(std::abs(rows.back().pos - 1.0) < 0.01);
    for (const auto& r : rows) {
        CHECK(std::isfinite(r.pos));
        CHECK(std::abs(r.pos) < 2.0);
    }
}

TEST_CASE("closed loop stays bounded under random references") {
    CounterRng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        const double ref = rng.uniform(-3.0, 3.0);
        const auto rows = simulate_cascade(CascadeGains{}, MotorPlant{}, ref, 5.0, 4e-6, 50000);
        for (const auto& r : rows) {
            CHECK(std::abs(r.pos) <= 2.0 * std::abs(ref) + 1e-9);
        }
    }
}

TEST_CASE("simulate_cascade rejects bad timing and writes csv") {
    CHECK_THROWS_AS(simulate_cascade(CascadeGains{}, MotorPlant{}, 1.0, 1.0, 0.0), Error);
    const auto rows = simulate_cascade(CascadeGains{}, MotorPlant{}, 1.0, 0.001, 1e-4);
    CHECK(rows.size() == 11);
    std::ostringstream out;
    write_control_trace_csv(rows, out);
    CHECK(out.str().rfind("t,ref,pos,vel,command\n", 0) == 0);
}

namespace {

// Forward quadrature sequence 00 -> 10 -> 11 -> 01.
std::vector<std::pair<int, int>> forward_edges(int n) {
    const std::pair<int, int> seq[4] = {{1, 0}, {1, 1}, {0, 1}, {0, 0}};
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(seq[i % 4]);
    }
    return out;
}

}  // namespace

TEST_CASE("encoder counts edges in both directions") {
    EncoderModel m = encoder_decode(EncoderModel{}, forward_edges(20));
    CHECK(m.count == 20);
    CHECK(m.errors == 0);
    CHECK(encoder_position_deg(m) == doctest::Approx(360.0));

    const std::vector<std::pair<int, int>> back{{0, 1}, {1, 1}, {1, 0}, {0, 0}, {0, 1}};
    m = encoder_decode(m, back);
    CHECK(m.count == 15);

    const EncoderModel jump = encoder_decode(EncoderModel{}, {{1, 1}});
    CHECK(jump.count == 0);
    CHECK(jump.errors == 1);

    const EncoderModel same = encoder_decode(EncoderModel{}, {{0, 0}, {0, 0}});
    CHECK(same.count == 0);
    CHECK(same.errors == 0);
    CHECK_THROWS_AS(encoder_decode(EncoderModel{}, {{2, 0}}), Error);
}

TEST_CASE("encoder speed") {
    CHECK(encoder_speed(40.0, 0.5) == 80.0);
    try {
        encoder_speed(1.0, 0.0);
        FAIL("expected ZeroInterval");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroInterval);
    }
}

TEST_CASE("angle to steps") {
    CHECK(angle_to_steps(2.0 * kPi, 0) == 4800);
    CHECK(angle_to_steps(2.0 * kPi, 1) == 4000);
    CHECK(angle_to_steps(2.0 * kPi, 2) == 4000);
    CHECK(angle_to_steps(2.0 * kPi, 3) == 2048);
    CHECK(angle_to_steps(-2.0 * kPi, 3) == -2048);
    // Half a step rounds away from zero.
    CHECK(angle_to_steps(0.5 * 2.0 * kPi / 4000.0, 1) == 1);
    CHECK(angle_to_steps(-0.5 * 2.0 * kPi / 4000.0, 1) == -1);
    CHECK_THROWS_AS(angle_to_steps(1.0, 4), Error);
    CHECK(steps_to_angle(4800, 0) == doctest::Approx(2.0 * kPi));

    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int i = 0; i < 200; ++i) {
        const double a = u(gen);
        for (int j = 0; j < kNumJoints; ++j) {
            const auto s = angle_to_steps(a, j);
            CHECK(std::abs(steps_to_angle(static_cast<double>(s), j) - a) <=
                  0.5 * 2.0 * kPi / StepperPlan{}.steps_per_rev[j] + 1e-12);
        }
    }
}

TEST_CASE("coupling compensation") {
    const StepVector d{10, 76, -3, 5};
    const StepVector c = apply_coupling(d);
    CHECK(c[0] == 10);
    CHECK(c[1] == 76);
    CHECK(c[2] == -3 + 15);
    CHECK(c[3] == 5);
    CHECK(apply_coupling(StepVector{0, -76, 0, 0})[2] == -15);
    CHECK(apply_coupling(StepVector{0, 5, 0, 0})[2] == 1);
    CHECK(apply_coupling(StepVector{0, -5, 0, 0})[2] == -1);
}

TEST_CASE("stepper reaches its target within the trapezoid time") {
    const double max_rate = 800.0;
    const double accel = 1000.0;
    const double dt = 0.001;
    const std::int64_t target = 4800;
    StepperAxis a;
    int ticks = 0;
    while (!a.at_rest(target) && ticks < 100000) {
        a = stepper_advance(a, target, max_rate, accel, dt);
        CHECK(std::abs(a.rate) <= max_rate + 1e-9);
        ++ticks;
    }
    CHECK(a.at_rest(target));
    // Trapezoid: accel and decel 0.8 s each covering 640 steps, cruise 3520 steps at 800/s.
    const double ideal = 2.0 * max_rate / accel + (4800.0 - max_rate * max_rate / accel) / max_rate;
    CHECK(ticks * dt == doctest::Approx(ideal).epsilon(0.01));
}

TEST_CASE("stepper short moves and reversal") {
    StepperAxis a;
    for (int k = 0; k < 2000 && !a.at_rest(3); ++k) {
        a = stepper_advance(a, 3, 800.0, 1000.0, 0.001);
    }
    CHECK(a.at_rest(3));
    for (int k = 0; k < 5000 && !a.at_rest(-50); ++k) {
        a = stepper_advance(a, -50, 800.0, 1000.0, 0.001);
    }
    CHECK(a.at_rest(-50));
    CHECK_THROWS_AS(stepper_advance(a, 0, 800.0, 1000.0, 0.0), Error);
}

TEST_CASE("stepper brake stops on a whole step") {
    StepperAxis a{10.3, 500.0};
    int k = 0;
    while (a.rate != 0.0 && k < 10000) {
        const double before = std::abs(a.rate);
        a = stepper_brake(a, 1000.0, 0.001);
        CHECK(std::abs(a.rate) <= before);
        ++k;
    }
    CHECK(a.rate == 0.0);
    CHECK(a.position == std::round(a.position));
    CHECK(k == doctest::Approx(500).epsilon(0.01));
}

TEST_CASE("stepper plan validation") {
    StepperPlan plan;
    plan.validate();
    plan.steps_per_rev[2] = 0;
    CHECK_THROWS_AS(plan.validate(), Error);
}
