#pragma once

#include "feedarm/common.hpp"

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace feedarm::dynamics {

/// Link geometry, weights and drive capacities of the arm (SI units).
struct LinkParams {
    double L0 = 0.0695, L1 = 0.0875, L2 = 0.1440, L3 = 0.1200, L4 = 0.0553;  // m
    double W2 = 2.73, W3 = 1.25, W4 = 0.0123;                               // N
    double WJ3 = 1.67, WJ4 = 0.40;                                          // N
    double m2 = 0.273, m3 = 0.125;                                          // kg
    std::array<double, kNumJoints> drive_torque{2.40, 1.40, 2.75, 0.04};    // N*m
    double eta_belt = 0.9;
    double alpha_max = 9.8125;  // rad/s^2

    // Lumped inertias for the joints the rod model does not cover (kg*m^2).
    // joint1_inertia defaults to I2.
    std::optional<double> joint1_inertia;
    double joint4_inertia = 1e-5;

    void validate() const;
};

enum class GravityVariant {
    WithJoint4,  // full sums including link/joint 4 and the payload at the tip
    Reduced,     // end effector removed: payload carried at joint 4
};

struct TorqueReport {
    std::array<double, kNumJoints> torque{};  // T1g..T4g (N*m)
    double payload = 0.0;                     // W_L (N)
    int binding_joint = 0;                    // 1-based; 0 when nothing binds
    // Largest payload each joint tolerates on its own (N); +inf for joints without a limit.
    std::array<double, kNumJoints> joint_payload_limit{};
};

struct ProfileSample {
    double t = 0.0;
    JointVector q, qd, qdd;
};

struct JointState {
    JointVector q, qd;
};

TorqueReport gravity_torques(const LinkParams& p, double payload, GravityVariant variant = GravityVariant::WithJoint4);

TorqueReport max_payload_static(const LinkParams& p, GravityVariant variant = GravityVariant::WithJoint4);

/// Gravity (reduced sums) plus rod inertia at alpha_max for joints 2 and 3.
TorqueReport max_payload_dynamic(const LinkParams& p);

/// Rod-about-end moments (1/3) m L^2 for links 2 and 3.
std::pair<double, double> inertia_moments(const LinkParams& p);

std::array<double, kNumJoints> joint_inertias(const LinkParams& p);

/// Per-joint symmetric trapezoid, 1/3 accelerate, 1/3 cruise, 1/3 decelerate.
/// Samples at t = 0, dt, 2dt, ... and exactly at `duration`.
std::vector<ProfileSample> trapezoidal_profile(const JointVector& q0, const JointVector& qf, double duration, double dt);

/// Pose-dependent gravity load (N*m): each moment arm is scaled by the cosine of the
/// carrying link's accumulated elevation q2, q2+q3, q2+q3+q4. Zero for joint 1.
std::array<double, kNumJoints> gravity_load(const LinkParams& p, const JointVector& q, double payload);

std::array<double, kNumJoints> inverse_dynamics(const LinkParams& p, const ProfileSample& sample, double payload = 0.0);

/// Semi-implicit Euler: qd += qdd dt, then q += qd dt.
JointState forward_dynamics_step(const LinkParams& p, const JointState& state,
                                 const std::array<double, kNumJoints>& torque, double dt, double payload = 0.0);

// Drives forward dynamics with torques from inverse dynamics along `profile`.
// Gravity in the inverse model is evaluated at the integrated state; evaluating
// it at the reference pose is exponentially unstable above the horizontal.
JointState track_profile(const LinkParams& p, const std::vector<ProfileSample>& profile, double payload = 0.0);

/// CSV `t,q1,q2,q3,q4,qd1..qd4,qdd1..qdd4`.
void write_trajectory_csv(const std::vector<ProfileSample>& profile, std::ostream& out);

}  // namespace feedarm::dynamics
