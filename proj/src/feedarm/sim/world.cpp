#include "feedarm/sim/world.hpp"

#include <algorithm>
#include <limits>

namespace feedarm::sim {

using supervisor::FeedingState;
using supervisor::Signal;

namespace {

constexpr std::size_t kEventTail = 50;

bool is_product_state(FeedingState s) {
    return s == FeedingState::X1 || s == FeedingState::X2 || s == FeedingState::X3;
}

bool jog_allowed(FeedingState s) {
    return s == FeedingState::X0 || s == FeedingState::X9 || s == FeedingState::X10;
}

}  // namespace

JointVector to_dh(const JointVector& q) {
    return JointVector{{-q[0], q[1], q[2], q[3]}};
}

JointVector from_dh(const JointVector& theta) {
    return JointVector{{-theta[0], theta[1], theta[2], theta[3]}};
}

Transform camera_pose_world(const JointVector& q) {
    const auto table = kinematics::DHTable::standard();
    Transform pose = kinematics::chain_transform(table, to_dh(q), 3) * vision::camera_optical_mount();
    pose.translation *= 1e-3;
    return pose;
}

Simulator::Simulator(Scenario scenario)
    : scenario_(std::move(scenario)), min_servo_error_(std::numeric_limits<double>::infinity()) {
    scenario_.validate();
    const auto& plan = scenario_.stepper;
    for (int j = 0; j < kNumJoints; ++j) {
        joint_targets_[j] = motor::angle_to_steps(scenario_.initial_q[j], j, plan);
    }
    const motor::StepVector motor = motor::apply_coupling(joint_targets_, plan);
    for (int j = 0; j < kNumJoints; ++j) {
        axes_[j].position = static_cast<double>(motor[j]);
    }
    world_.target_steps = motor;
    world_.state = FeedingState::X0;
    first_entry_[static_cast<int>(FeedingState::X0)] = 0.0;
    refresh_pose_and_detection();
}

void Simulator::enqueue(Signal u) {
    operator_.push_back(u);
}

void Simulator::enqueue_jog(const Jog& jog) {
    if (jog.joint < 1 || jog.joint > kNumJoints) {
        throw Error(ErrorCode::InvalidArgument, "jog joint must be 1..4");
    }
    if (!std::isfinite(jog.delta_rad)) {
        throw Error(ErrorCode::InvalidArgument, "jog delta must be finite");
    }
    jogs_.push_back(jog);
}

Vec3 Simulator::nose_at(double t) const {
    return scenario_.nose_world + scenario_.nose_drift * t;
}

std::optional<double> Simulator::first_time_in(FeedingState s) const {
    return first_entry_[static_cast<int>(s)];
}

supervisor::Trace Simulator::tick() {
    world_.events.clear();
    supervisor::Trace rows;

    if (world_.tick == 0) {
        const auto limit = dynamics::max_payload_dynamic(scenario_.links);
        if (scenario_.payload_n > limit.payload) {
            raise("warning", "payload " + std::to_string(scenario_.payload_n) + " N exceeds the dynamic limit " +
                                 std::to_string(limit.payload) + " N");
        }
    }

    std::vector<Signal> pending;
    pending.swap(internal_);
    const auto& sched = scenario_.signals;
    while (next_scheduled_ < sched.size() && sched[next_scheduled_].t <= world_.t + 1e-9) {
        pending.push_back(sched[next_scheduled_++].u);
    }
    pending.insert(pending.end(), operator_.begin(), operator_.end());
    operator_.clear();
    for (const Signal u : pending) {
        consume(u, rows);
    }

    for (const Jog& jog : jogs_) {
        apply_jog(jog);
    }
    jogs_.clear();

    behave();
    advance_steppers();

    ++world_.tick;
    world_.t = static_cast<double>(world_.tick) * scenario_.dt;
    refresh_pose_and_detection();

    trace_.insert(trace_.end(), rows.begin(), rows.end());
    return rows;
}

void Simulator::consume(Signal u, supervisor::Trace& rows) {
    const std::size_t first = rows.size();
    world_.state = supervisor::apply(world_.state, u, world_.t, rows);
    for (std::size_t i = first; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.next != row.state) {
            auto& seen = first_entry_[static_cast<int>(row.next)];
            if (!seen) {
                seen = world_.t;
            }
            on_enter(row.state, row.next, row.signal);
        }
    }
}

void Simulator::on_enter(FeedingState from, FeedingState to, Signal via) {
    if (from == FeedingState::X8) {
        // Reset: whatever the steppers were heading for is forgotten.
        halting_ = false;
        world_.target_steps = world_.motor_steps;
        joint_targets_ = world_.joint_steps;
    }
    switch (to) {
    case FeedingState::X8:
        halting_ = true;
        raise("fault", "emergency stop");
        break;
    case FeedingState::X0:
        if (via == Signal::u10) {
            halting_ = true;
        }
        break;
    case FeedingState::X1:
    case FeedingState::X4:
        set_joint_targets(scenario_.detect_pose);
        search_attempt_ = 0;
        settled_since_ = -1.0;
        break;
    case FeedingState::X2:
    case FeedingState::X5:
        phase_ = ServoPhase::Servo;
        history_.clear();
        break;
    case FeedingState::X3:
    case FeedingState::X6:
        entered_at_ = world_.t;
        dwell_reported_ = false;
        break;
    case FeedingState::X10:
        raise("fault", "no objects found");
        break;
    default:
        break;
    }
}

void Simulator::behave() {
    if (halting_) {
        return;
    }
    switch (world_.state) {
    case FeedingState::X1:
        search_behavior(true);
        break;
    case FeedingState::X4:
        search_behavior(false);
        break;
    case FeedingState::X2:
        servo_behavior(true);
        break;
    case FeedingState::X5:
        servo_behavior(false);
        break;
    case FeedingState::X3:
        if (!dwell_reported_ && world_.t - entered_at_ >= scenario_.grasp_dwell_s - 1e-9) {
            dwell_reported_ = true;
            if (scenario_.grasp_succeeds) {
                emit(Signal::u3);
            } else {
                raise("fault", "grasp not confirmed");
            }
        }
        break;
    case FeedingState::X6:
        if (!dwell_reported_ && world_.t - entered_at_ >= scenario_.feed_dwell_s - 1e-9) {
            dwell_reported_ = true;
            emit(Signal::u6);
        }
        break;
    default:
        break;
    }
}

void Simulator::search_behavior(bool product) {
    if (!steppers_idle()) {
        settled_since_ = -1.0;
        return;
    }
    if (settled_since_ < 0.0) {
        settled_since_ = world_.t;
    }
    if (world_.t - settled_since_ < scenario_.settle_s - 1e-9) {
        return;
    }
    settled_since_ = -1.0;
    if (world_.detection.found) {
        emit(product ? Signal::p_found : Signal::u4);
        raise("info", product ? "product in view" : "face in view");
        return;
    }
    if (search_attempt_ >= scenario_.servo.max_search_attempts) {
        raise("fault", "search exhausted after " + std::to_string(search_attempt_) + " attempts");
        emit(Signal::u11);
        return;
    }
    const auto table = kinematics::DHTable::standard();
    JointVector q = world_.q;
    q[0] = std::clamp(q[0] + vision::search_sweep(search_attempt_, scenario_.servo), table.rows[0].limit_lo,
                      table.rows[0].limit_hi);
    raise("info", "search sweep " + std::to_string(search_attempt_ + 1));
    ++search_attempt_;
    set_joint_targets(q);
}

void Simulator::servo_behavior(bool product) {
    if (phase_ == ServoPhase::Approach) {
        if (steppers_idle()) {
            phase_ = ServoPhase::Servo;
            emit(product ? Signal::u2 : Signal::u5);
        }
        return;
    }
    if (!steppers_idle() || !world_.detection.found) {
        return;
    }
    const auto& cfg = scenario_.servo;
    const double s = vision::ibvs_error(world_.detection);
    if (s > cfg.radius_threshold) {
        history_.clear();
        history_.push_back({world_.t, s});
        set_joint_targets(vision::ibvs_step(world_.q, world_.detection, cfg));
        return;
    }
    history_.push_back({world_.t, s});
    if (vision::stability_gate(history_, cfg, world_.t)) {
        plan_approach(product);
    }
}

void Simulator::plan_approach(bool product) {
    const auto table = kinematics::DHTable::standard();
    const Transform link = kinematics::chain_transform(table, to_dh(world_.q), 3) * vision::camera_link_mount();
    for (int k = 0; k < scenario_.servo.max_plan_attempts; ++k) {
        const Vec3 p = link.apply(vision::feed_target_camera_link(world_.detection, vision::plan_shrink(k)) * 1000.0);
        try {
            // Accept the closest reachable point inside the goal tolerance.
            const Vec3 goal = kinematics::nearest_reachable(p, 0.0, table);
            if ((goal - p).norm() > scenario_.servo.plan_tolerance_mm) {
                continue;
            }
            const JointVector theta = kinematics::inverse_kinematics(goal, 0.0, table);
            if (!kinematics::within_limits(table, theta)) {
                continue;
            }
            set_joint_targets(from_dh(theta));
            phase_ = ServoPhase::Approach;
            raise("info", std::string(product ? "approach to product" : "approach to face") + " planned on attempt " +
                              std::to_string(k + 1));
            return;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Unreachable && e.code() != ErrorCode::SingularBase) {
                throw;
            }
        }
    }
    raise("fault", "approach planning failed");
    emit(Signal::u11);
    history_.clear();
}

void Simulator::apply_jog(const Jog& jog) {
    if (!jog_allowed(world_.state) || halting_) {
        raise("info", "jog ignored in " + std::string(supervisor::state_name(world_.state)));
        return;
    }
    motor::StepVector delta{};
    delta[jog.joint - 1] = motor::angle_to_steps(jog.delta_rad, jog.joint - 1, scenario_.stepper);
    const motor::StepVector motor = motor::apply_coupling(delta, scenario_.stepper);
    for (int j = 0; j < kNumJoints; ++j) {
        joint_targets_[j] += delta[j];
        world_.target_steps[j] += motor[j];
    }
}

void Simulator::set_joint_targets(const JointVector& q) {
    if (world_.state == FeedingState::X8) {
        return;
    }
    motor::StepVector delta{};
    for (int j = 0; j < kNumJoints; ++j) {
        const std::int64_t goal = motor::angle_to_steps(q[j], j, scenario_.stepper);
        delta[j] = goal - joint_targets_[j];
        joint_targets_[j] = goal;
    }
    const motor::StepVector motor = motor::apply_coupling(delta, scenario_.stepper);
    for (int j = 0; j < kNumJoints; ++j) {
        world_.target_steps[j] += motor[j];
    }
}

void Simulator::advance_steppers() {
    const auto& plan = scenario_.stepper;
    bool all_stopped = true;
    for (int j = 0; j < kNumJoints; ++j) {
        if (halting_) {
            axes_[j] = motor::stepper_brake(axes_[j], plan.accel[j], scenario_.dt);
        } else {
            axes_[j] = motor::stepper_advance(axes_[j], world_.target_steps[j], plan.max_rate[j], plan.accel[j],
                                              scenario_.dt);
        }
        all_stopped = all_stopped && axes_[j].rate == 0.0;
    }
    if (halting_ && all_stopped && world_.state != FeedingState::X8) {
        halting_ = false;
        for (int j = 0; j < kNumJoints; ++j) {
            world_.target_steps[j] = axes_[j].steps();
        }
        joint_targets_ = world_.target_steps;
        joint_targets_[2] -= std::llround(plan.coupling_2_to_3 * static_cast<double>(world_.target_steps[1]));
    }
}

bool Simulator::steppers_idle() const {
    for (int j = 0; j < kNumJoints; ++j) {
        if (!axes_[j].at_rest(world_.target_steps[j])) {
            return false;
        }
    }
    return true;
}

void Simulator::refresh_pose_and_detection() {
    const auto& plan = scenario_.stepper;
    for (int j = 0; j < kNumJoints; ++j) {
        world_.motor_steps[j] = axes_[j].steps();
    }
    world_.joint_steps = world_.motor_steps;
    world_.joint_steps[2] -= std::llround(plan.coupling_2_to_3 * static_cast<double>(world_.motor_steps[1]));
    for (int j = 0; j < kNumJoints; ++j) {
        world_.q[j] = motor::steps_to_angle(static_cast<double>(world_.joint_steps[j]), j, plan);
    }

    const Vec3 target = is_product_state(world_.state) ? scenario_.food_world : nose_at(world_.t);
    CounterRng rng = CounterRng(scenario_.seed).split(static_cast<std::uint64_t>(world_.tick));
    world_.detection =
        vision::detect_target_sim(scenario_.camera, camera_pose_world(world_.q), target, scenario_.noise_px, rng);
    if (world_.detection.found) {
        world_.servo_error = vision::ibvs_error(world_.detection);
        min_servo_error_ = std::min(min_servo_error_, *world_.servo_error);
    } else {
        world_.servo_error.reset();
    }
}

void Simulator::raise(const char* kind, std::string message) {
    Event e{world_.t, kind, std::move(message)};
    world_.events.push_back(e);
    world_.event_tail.push_back(std::move(e));
    while (world_.event_tail.size() > kEventTail) {
        world_.event_tail.pop_front();
    }
}

}  // namespace feedarm::sim
