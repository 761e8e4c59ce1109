#include <doctest.h>

#include "feedarm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

using namespace feedarm;
using namespace feedarm::dynamics;

namespace {

// Reference moment sums written out term by term from the link list
// (weights in N, lengths in m), independent of the library's affine split.
double oracle_t2(double wl) {
    return 2.73 * 0.072 + 1.67 * 0.144 + 1.25 * (0.144 + 0.060) + 0.40 * 0.264 + 0.0123 * (0.264 + 0.02765) +
           wl * 0.3193;
}

double oracle_t3(double wl) { return 1.25 * 0.060 + 0.40 * 0.120 + 0.0123 * (0.120 + 0.02765) + wl * 0.1753; }

double oracle_t4(double wl) { return 0.0123 * 0.02765 + wl * 0.0553; }

}  // namespace

TEST_CASE("gravity torques against hand sums") {
    const LinkParams p;
    for (double wl : {0.0, 0.3, 0.699, 1.5}) {
        const TorqueReport r = gravity_torques(p, wl);
        CHECK(r.torque[0] == 0.0);
        CHECK(r.torque[1] == doctest::Approx(oracle_t2(wl)).epsilon(1e-12));
        CHECK(r.torque[2] == doctest::Approx(oracle_t3(wl)).epsilon(1e-12));
        CHECK(r.torque[3] == doctest::Approx(oracle_t4(wl)).epsilon(1e-12));
        CHECK(r.payload == wl);
    }
}

TEST_CASE("gravity torques at the reference payload") {
    const TorqueReport r = gravity_torques(LinkParams{}, 0.699);
    CHECK(std::abs(r.torque[1] - 1.0246) < 1e-3);
    CHECK(std::abs(r.torque[2] - 0.247) < 1e-3);
}

TEST_CASE("reduced variant drops the end effector") {
    const LinkParams p;
    const TorqueReport r = gravity_torques(p, 1.0, GravityVariant::Reduced);
    const double t2 = 2.73 * 0.072 + 1.67 * 0.144 + 1.25 * 0.204 + 0.40 * 0.264 + 0.264;
    const double t3 = 1.25 * 0.060 + 0.40 * 0.120 + 0.120;
    CHECK(r.torque[1] == doctest::Approx(t2).epsilon(1e-12));
    CHECK(r.torque[2] == doctest::Approx(t3).epsilon(1e-12));
    CHECK(r.torque[3] == 0.0);
}

TEST_CASE("negative payload is rejected") {
    CHECK_THROWS_AS(gravity_torques(LinkParams{}, -0.1), Error);
}

TEST_CASE("static payload limits") {
    const LinkParams p;
    SUBCASE("joint 4 included") {
        const TorqueReport r = max_payload_static(p);
        const double j4 = (0.04 - 0.0123 * 0.02765) / 0.0553;
        const double j2 = (1.40 * 0.9 - oracle_t2(0.0)) / 0.3193;
        const double j3 = (2.75 * 0.9 - oracle_t3(0.0)) / 0.1753;
        CHECK(r.binding_joint == 4);
        CHECK(r.payload == doctest::Approx(j4).epsilon(1e-12));
        CHECK(r.joint_payload_limit[1] == doctest::Approx(j2).epsilon(1e-12));
        CHECK(r.joint_payload_limit[2] == doctest::Approx(j3).epsilon(1e-12));
        CHECK(std::isinf(r.joint_payload_limit[0]));
        // At the limit the binding joint sits exactly at its capacity.
        CHECK(r.torque[3] == doctest::Approx(0.04).epsilon(1e-12));
    }
    SUBCASE("reduced") {
        const TorqueReport r = max_payload_static(p, GravityVariant::Reduced);
        const double j2 = (1.26 - (2.73 * 0.072 + 1.67 * 0.144 + 1.25 * 0.204 + 0.40 * 0.264)) / 0.264;
        CHECK(r.binding_joint == 2);
        CHECK(r.payload == doctest::Approx(j2).epsilon(1e-12));
        CHECK(r.payload == doctest::Approx(1.7514).epsilon(1e-3));
    }
}

TEST_CASE("dynamic payload limit") {
    const LinkParams p;
    const TorqueReport r = max_payload_dynamic(p);
    const double i2 = 0.273 * 0.144 * 0.144 / 3.0;
    const double i3 = 0.125 * 0.120 * 0.120 / 3.0;
    const double j2 = (1.26 - (2.73 * 0.072 + 1.67 * 0.144 + 1.25 * 0.204 + 0.40 * 0.264) - i2 * 9.8125) / 0.264;
    const double j3 = (2.475 - (1.25 * 0.060 + 0.40 * 0.120) - i3 * 9.8125) / 0.120;
    CHECK(r.binding_joint == 2);
    CHECK(r.payload == doctest::Approx(j2).epsilon(1e-12));
    CHECK(r.joint_payload_limit[2] == doctest::Approx(j3).epsilon(1e-12));
    CHECK(r.payload == doctest::Approx(1.6812).epsilon(5e-3));
    CHECK(r.joint_payload_limit[2] == doctest::Approx(19.55).epsilon(5e-3));
}

TEST_CASE("payload limits follow the drive capacity") {
    LinkParams p;
    p.drive_torque[1] = 10.0;
    const TorqueReport r = max_payload_dynamic(p);
    CHECK(r.binding_joint == 3);
    p.drive_torque = {0.0, 0.0, 0.0, 0.0};
    const TorqueReport none = max_payload_static(p);
    CHECK(none.payload == 0.0);
}

TEST_CASE("inertia moments and torques") {
    const LinkParams p;
    const auto [i2, i3] = inertia_moments(p);
    CHECK(i2 == doctest::Approx(0.273 * 0.144 * 0.144 / 3.0).epsilon(1e-12));
    CHECK(i3 == doctest::Approx(0.125 * 0.0144 / 3.0).epsilon(1e-12));
    CHECK(i2 * p.alpha_max == doctest::Approx(0.018516).epsilon(1e-4));
    CHECK(i3 * p.alpha_max == doctest::Approx(0.0058875).epsilon(1e-4));
    const auto all = joint_inertias(p);
    CHECK(all[0] == i2);
    CHECK(all[3] == p.joint4_inertia);
    p.validate();
    LinkParams bad;
    bad.eta_belt = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("trapezoidal profile shape") {
    JointVector q0;
    JointVector qf;
    qf[0] = 1.2;
    qf[1] = -0.6;
    qf[3] = 0.3;
    const double duration = 3.0;
    const auto prof = trapezoidal_profile(q0, qf, duration, 0.01);
    REQUIRE(prof.size() == 301);
    CHECK(prof.front().t == 0.0);
    CHECK(prof.back().t == duration);
    for (int j = 0; j < kNumJoints; ++j) {
        CHECK(prof.front().q[j] == doctest::Approx(q0[j]));
        CHECK(prof.back().q[j] == doctest::Approx(qf[j]).epsilon(1e-12));
        CHECK(std::abs(prof.back().qd[j]) < 1e-12);
    }
    // Cruise speed: delta over two thirds of the duration.
    const ProfileSample& mid = prof[150];
    CHECK(mid.qd[0] == doctest::Approx(1.2 / 2.0).epsilon(1e-12));
    CHECK(mid.qdd[0] == 0.0);
    CHECK(prof[10].qdd[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(prof[290].qdd[1] == doctest::Approx(0.3).epsilon(1e-12));

    // Velocity integrates to position along the sampled profile.
    double q = 0.0;
    for (std::size_t k = 0; k + 1 < prof.size(); ++k) {
        q += 0.5 * (prof[k].qd[0] + prof[k + 1].qd[0]) * (prof[k + 1].t - prof[k].t);
    }
    CHECK(q == doctest::Approx(1.2).epsilon(1e-3));
}

TEST_CASE("trapezoidal profile timing errors") {
    const JointVector z;
    CHECK_THROWS_AS(trapezoidal_profile(z, z, 0.0, 0.01), Error);
    CHECK_THROWS_AS(trapezoidal_profile(z, z, 1.0, 0.0), Error);
    CHECK_THROWS_AS(trapezoidal_profile(z, z, 1.0, 0.3), Error);
    try {
        trapezoidal_profile(z, z, -1.0, 0.01);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadTiming);
    }
    CHECK(trapezoidal_profile(z, z, 1.0, 0.25).size() == 5);
}

TEST_CASE("gravity load matches the horizontal sums at zero pose") {
    const LinkParams p;
    const auto g = gravity_load(p, JointVector{}, 0.5);
    const TorqueReport r = gravity_torques(p, 0.5);
    for (int j = 0; j < kNumJoints; ++j) {
        CHECK(g[j] == doctest::Approx(r.torque[j]).epsilon(1e-12));
    }
    JointVector up;
    up[1] = kPi / 2.0;
    const auto gu = gravity_load(p, up, 0.5);
    CHECK(std::abs(gu[1]) < 1e-12);
    CHECK(std::abs(gu[3]) < 1e-12);
}

TEST_CASE("inverse and forward dynamics are consistent") {
    const LinkParams p;
    ProfileSample s;
    s.q[1] = 0.4;
    s.q[2] = -0.3;
    s.qdd = JointVector{{0.5, -1.0, 2.0, 0.1}};
    const auto tau = inverse_dynamics(p, s, 0.2);
    const JointState next = forward_dynamics_step(p, JointState{s.q, s.qd}, tau, 0.001, 0.2);
    for (int j = 0; j < kNumJoints; ++j) {
        CHECK(next.qd[j] == doctest::Approx(s.qdd[j] * 0.001).epsilon(1e-9));
        CHECK(next.q[j] == doctest::Approx(s.q[j] + s.qdd[j] * 1e-6).epsilon(1e-9));
    }
    CHECK_THROWS_AS(forward_dynamics_step(p, JointState{}, tau, 0.0), Error);
}

TEST_CASE("tracking a profile ends at the goal") {
    const LinkParams p;
    JointVector q0;
    q0[1] = 0.2;
    JointVector qf;
    qf[0] = 0.8;
    qf[1] = 1.1;
    qf[2] = -0.9;
    qf[3] = 0.4;
    const auto prof = trapezoidal_profile(q0, qf, 2.0, 0.001);
    const JointState end = track_profile(p, prof, 0.5);
    for (int j = 0; j < kNumJoints; ++j) {
        CHECK(end.q[j] == doctest::Approx(qf[j]).epsilon(1e-2));
    }
    CHECK(track_profile(p, {}).q == JointVector{});
}

TEST_CASE("trajectory csv layout") {
    JointVector qf;
    qf[0] = 1.0;
    const auto prof = trapezoidal_profile(JointVector{}, qf, 1.0, 0.25);
    std::ostringstream out;
    write_trajectory_csv(prof, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,q1,q2,q3,q4,qd1,qd2,qd3,qd4,qdd1,qdd2,qdd3,qdd4");
    int rows = 0;
    while (std::getline(in, line)) {
        CHECK(std::count(line.begin(), line.end(), ',') == 12);
        ++rows;
    }
    CHECK(rows == 5);
}
