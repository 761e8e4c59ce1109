#pragma once

#include "feedarm/common.hpp"

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

namespace feedarm::motor {

/// First-order velocity plant G_v(s) = K / (J s + b).
struct MotorPlant {
    double J = 0.05;
    double b = 0.75;
    double K = 1.0;
    double velocity = 0.0;  // rad/s
    double angle = 0.0;     // rad
};

/// Explicit velocity update, then angle from the new velocity.
MotorPlant plant_step(const MotorPlant& plant, double command, double dt);

struct CascadeGains {
    double Kp1 = 120.0, Ki1 = 10.0, Kd1 = 500.0;  // position loop
    double Kp2 = 20.0, Ki2 = 30.0;                // velocity loop
    // Bound on each integrator's contribution to its loop output.
    double integrator_limit = 120.0;
};

struct CascadeState {
    double pos_integral = 0.0;
    double vel_integral = 0.0;
};

struct CascadeOutput {
    double command = 0.0;
    double velocity_ref = 0.0;
    CascadeState state;
};

/// Outer PID on position error (derivative taken on the measured velocity)
/// feeding an inner PI on velocity error.
CascadeOutput cascade_step(const CascadeGains& gains, double ref_pos, double meas_pos, double meas_vel, double dt,
                           const CascadeState& state);

struct DerivedCharacteristics {
    double omega_n = 0.0;
    double zeta = 0.0;
    double J = 0.0;
    double b = 0.0;
};

/// omega_n = sqrt(Kp2), zeta = Ki2 / (2 sqrt(Kp2)), J = 1/omega_n^2, b = 2 zeta omega_n J.
DerivedCharacteristics derived_characteristics(const CascadeGains& gains);

struct TraceRow {
    double t, ref, pos, vel, command;
};

/// Closed loop of cascade_step over plant_step; records every `record_every`-th step.
std::vector<TraceRow> simulate_cascade(const CascadeGains& gains, MotorPlant plant, double ref, double duration,
                                       double dt, int record_every = 1);

/// CSV `t,ref,pos,vel,command`.
void write_control_trace_csv(const std::vector<TraceRow>& rows, std::ostream& out);

struct EncoderModel {
    int ppr = 20;
    std::int64_t count = 0;
    std::uint8_t phase_state = 0;  // (A << 1) | B
    std::int64_t errors = 0;
};

/// Quadrature decode of successive (A, B) levels. Forward order is 00 -> 10 -> 11 -> 01.
EncoderModel encoder_decode(const EncoderModel& model, const std::vector<std::pair<int, int>>& levels);

/// P = N * 360 / PPR, degrees.
double encoder_position_deg(const EncoderModel& model);

/// V = N / T. Throws Error{ZeroInterval} unless T > 0.
double encoder_speed(double counts, double interval);

struct StepperPlan {
    std::array<int, kNumJoints> steps_per_rev{4800, 4000, 4000, 2048};
    double coupling_2_to_3 = 0.2;
    std::array<double, kNumJoints> max_rate{800.0, 800.0, 800.0, 380.0};  // steps/s
    std::array<double, kNumJoints> accel{1000.0, 1000.0, 1000.0, 1000.0}; // steps/s^2

    void validate() const;
};

using StepVector = std::array<std::int64_t, kNumJoints>;

/// Round half away from zero of angle * steps_per_rev / 2pi. joint is 0-based.
std::int64_t angle_to_steps(double angle, int joint, const StepperPlan& plan = {});

double steps_to_angle(double steps, int joint, const StepperPlan& plan = {});

/// Joint 3 picks up round(coupling * joint-2 delta) to hold its angle while joint 2 moves the belt.
StepVector apply_coupling(const StepVector& delta_steps, const StepperPlan& plan = {});

/// Continuous stepper state; `steps()` is the whole-step position the driver has reached.
struct StepperAxis {
    double position = 0.0;  // steps
    double rate = 0.0;      // steps/s

    std::int64_t steps() const { return static_cast<std::int64_t>(std::llround(position)); }
    bool at_rest(std::int64_t target) const { return rate == 0.0 && steps() == target; }
};

/// One dt of a trapezoidal rate ramp toward `target`.
StepperAxis stepper_advance(const StepperAxis& axis, std::int64_t target, double max_rate, double accel, double dt);

/// Rate ramp toward zero regardless of target, used for emergency stops.
StepperAxis stepper_brake(const StepperAxis& axis, double accel, double dt);

}  // namespace feedarm::motor
