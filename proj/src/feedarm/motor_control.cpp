#include "feedarm/motor_control.hpp"

#include <algorithm>

namespace feedarm::motor {

MotorPlant plant_step(const MotorPlant& plant, double command, double dt) {
    MotorPlant next = plant;
    next.velocity = plant.velocity + dt * (plant.K * command - plant.b * plant.velocity) / plant.J;
    next.angle = plant.angle + dt * next.velocity;
    return next;
}

CascadeOutput cascade_step(const CascadeGains& g, double ref_pos, double meas_pos, double meas_vel, double dt,
                           const CascadeState& state) {
    CascadeOutput out;
    out.state = state;

    const double e_pos = ref_pos - meas_pos;
    out.state.pos_integral += e_pos * dt;
    if (g.Ki1 > 0.0) {
        const double lim = g.integrator_limit / g.Ki1;
        out.state.pos_integral = std::clamp(out.state.pos_integral, -lim, lim);
    }
    out.velocity_ref = g.Kp1 * e_pos + g.Ki1 * out.state.pos_integral - g.Kd1 * meas_vel;

    const double e_vel = out.velocity_ref - meas_vel;
    out.state.vel_integral += e_vel * dt;
    if (g.Ki2 > 0.0) {
        const double lim = g.integrator_limit / g.Ki2;
        out.state.vel_integral = std::clamp(out.state.vel_integral, -lim, lim);
    }
    out.command = g.Kp2 * e_vel + g.Ki2 * out.state.vel_integral;
    return out;
}

DerivedCharacteristics derived_characteristics(const CascadeGains& g) {
    DerivedCharacteristics d;
    d.omega_n = std::sqrt(g.Kp2);
    d.zeta = g.Ki2 / (2.0 * d.omega_n);
    d.J = 1.0 / (d.omega_n * d.omega_n);
    d.b = 2.0 * d.zeta * d.omega_n * d.J;
    return d;
}

std::vector<TraceRow> simulate_cascade(const CascadeGains& gains, MotorPlant plant, double ref, double duration,
                                       double dt, int record_every) {
    if (!(dt > 0.0) || !(duration > 0.0)) {
        throw Error(ErrorCode::BadTiming, "cascade simulation needs positive dt and duration");
    }
    record_every = std::max(record_every, 1);
    const auto steps = static_cast<long>(std::llround(duration / dt));
    std::vector<TraceRow> rows;
    rows.reserve(static_cast<std::size_t>(steps / record_every) + 2);
    CascadeState state;
    double command = 0.0;
    for (long k = 0; k <= steps; ++k) {
        if (k % record_every == 0 || k == steps) {
            rows.push_back({static_cast<double>(k) * dt, ref, plant.angle, plant.velocity, command});
        }
        if (k == steps) {
            break;
        }
        const CascadeOutput out = cascade_step(gains, ref, plant.angle, plant.velocity, dt, state);
        state = out.state;
        command = out.command;
        plant = plant_step(plant, command, dt);
    }
    return rows;
}

void write_control_trace_csv(const std::vector<TraceRow>& rows, std::ostream& out) {
    out << "t,ref,pos,vel,command\n";
    const auto prec = out.precision(10);
    for (const TraceRow& r : rows) {
        out << r.t << ',' << r.ref << ',' << r.pos << ',' << r.vel << ',' << r.command << '\n';
    }
    out.precision(prec);
}

namespace {

// Position of each 2-bit state along the forward cycle 00 -> 10 -> 11 -> 01.
constexpr std::array<int, 4> kCyclePos{0, 3, 1, 2};

}  // namespace

EncoderModel encoder_decode(const EncoderModel& model, const std::vector<std::pair<int, int>>& levels) {
    EncoderModel m = model;
    for (const auto& [a, b] : levels) {
        if ((a != 0 && a != 1) || (b != 0 && b != 1)) {
            throw Error(ErrorCode::InvalidArgument, "quadrature levels must be 0 or 1");
        }
        const auto next = static_cast<std::uint8_t>((a << 1) | b);
        const int diff = (kCyclePos[next] - kCyclePos[m.phase_state] + 4) % 4;
        if (diff == 1) {
            ++m.count;
        } else if (diff == 3) {
            --m.count;
        } else if (diff == 2) {
            ++m.errors;  // both channels changed at once: direction unknown
        }
        m.phase_state = next;
    }
    return m;
}

double encoder_position_deg(const EncoderModel& model) {
    return static_cast<double>(model.count) * 360.0 / model.ppr;
}

double encoder_speed(double counts, double interval) {
    if (!(interval > 0.0)) {
        throw Error(ErrorCode::ZeroInterval, "encoder speed needs a positive interval");
    }
    return counts / interval;
}

void StepperPlan::validate() const {
    for (int j = 0; j < kNumJoints; ++j) {
        if (steps_per_rev[j] <= 0) {
            throw Error(ErrorCode::ValidationError, "steps_per_rev must be positive");
        }
        if (!(max_rate[j] > 0.0) || !(accel[j] > 0.0)) {
            throw Error(ErrorCode::ValidationError, "stepper max_rate and accel must be positive");
        }
    }
}

std::int64_t angle_to_steps(double angle, int joint, const StepperPlan& plan) {
    if (joint < 0 || joint >= kNumJoints) {
        throw Error(ErrorCode::InvalidArgument, "joint index out of range");
    }
    // llround rounds halfway cases away from zero.
    return static_cast<std::int64_t>(std::llround(angle * plan.steps_per_rev[joint] / (2.0 * kPi)));
}

double steps_to_angle(double steps, int joint, const StepperPlan& plan) {
    if (joint < 0 || joint >= kNumJoints) {
        throw Error(ErrorCode::InvalidArgument, "joint index out of range");
    }
    return steps * 2.0 * kPi / plan.steps_per_rev[joint];
}

StepVector apply_coupling(const StepVector& delta_steps, const StepperPlan& plan) {
    StepVector out = delta_steps;
    out[2] += static_cast<std::int64_t>(std::llround(plan.coupling_2_to_3 * static_cast<double>(delta_steps[1])));
    return out;
}

StepperAxis stepper_advance(const StepperAxis& axis, std::int64_t target, double max_rate, double accel, double dt) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::BadTiming, "stepper dt must be positive");
    }
    const double goal = static_cast<double>(target);
    const double dist = goal - axis.position;
    if (dist == 0.0 && axis.rate == 0.0) {
        return axis;
    }
    const double dir = dist > 0.0 ? 1.0 : (dist < 0.0 ? -1.0 : 0.0);
    // Highest rate from which the remaining distance can still be braked.
    const double wanted = dir * std::min(max_rate, std::sqrt(2.0 * accel * std::abs(dist)));
    const double dv = accel * dt;
    StepperAxis next;
    next.rate = std::clamp(wanted, axis.rate - dv, axis.rate + dv);
    next.position = axis.position + next.rate * dt;

    const bool crossed = (goal - next.position) * dir <= 0.0;
    if (crossed && std::abs(next.rate) <= dv) {
        next.position = goal;
        next.rate = 0.0;
    }
    return next;
}

StepperAxis stepper_brake(const StepperAxis& axis, double accel, double dt) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::BadTiming, "stepper dt must be positive");
    }
    StepperAxis next = axis;
    const double dv = accel * dt;
    if (std::abs(axis.rate) <= dv) {
        next.rate = 0.0;
        next.position = std::round(axis.position);
        return next;
    }
    next.rate = axis.rate - std::copysign(dv, axis.rate);
    next.position = axis.position + next.rate * dt;
    return next;
}

}  // namespace feedarm::motor
