#pragma once

#include "feedarm/sim/scenario.hpp"

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace feedarm::sim {

struct Event {
    double t = 0.0;
    std::string kind;  // "warning", "fault", "info"
    std::string message;
};

struct Jog {
    int joint = 1;  // 1-based
    double delta_rad = 0.0;
};

struct WorldState {
    long tick = 0;
    double t = 0.0;
    JointVector q;                   // sim joint coordinates, rad
    motor::StepVector motor_steps{};  // whole steps each driver has taken
    motor::StepVector joint_steps{};  // motor steps with the belt coupling removed
    motor::StepVector target_steps{}; // motor step targets
    supervisor::FeedingState state = supervisor::FeedingState::X0;
    vision::NoseDetection detection;
    std::optional<double> servo_error;  // px; empty without a detection
    std::vector<Event> events;          // raised during this tick
    std::deque<Event> event_tail;       // most recent events overall
};

/// DH angles of a simulator joint vector (base joint turns about -z).
JointVector to_dh(const JointVector& q);
JointVector from_dh(const JointVector& theta);

/// Optical-frame pose in the world for simulator joints; translation in metres.
Transform camera_pose_world(const JointVector& q);

/// Discrete-time world: supervisor, servo logic, steppers and the simulated camera.
/// Not thread-safe; a single owner drives it with tick().
class Simulator {
public:
    explicit Simulator(Scenario scenario);

    const Scenario& scenario() const { return scenario_; }
    const WorldState& state() const { return world_; }
    const supervisor::Trace& trace() const { return trace_; }

    /// Queues an operator signal for the next tick.
    void enqueue(supervisor::Signal u);
    void enqueue_jog(const Jog& jog);

    /// Advances one dt. Returns the trace rows produced in this tick.
    supervisor::Trace tick();

    Vec3 nose_at(double t) const;
    double min_servo_error() const { return min_servo_error_; }
    std::optional<double> first_time_in(supervisor::FeedingState s) const;

private:
    enum class ServoPhase { Servo, Approach };

    void consume(supervisor::Signal u, supervisor::Trace& rows);
    void on_enter(supervisor::FeedingState from, supervisor::FeedingState to, supervisor::Signal via);
    void behave();
    void search_behavior(bool product);
    void servo_behavior(bool product);
    void plan_approach(bool product);
    void apply_jog(const Jog& jog);
    void set_joint_targets(const JointVector& q);
    void advance_steppers();
    void refresh_pose_and_detection();
    bool steppers_idle() const;
    void raise(const char* kind, std::string message);
    void emit(supervisor::Signal u) { internal_.push_back(u); }

    Scenario scenario_;
    WorldState world_;
    supervisor::Trace trace_;

    std::array<motor::StepperAxis, kNumJoints> axes_{};
    motor::StepVector joint_targets_{};  // decoupled joint-step targets
    bool halting_ = false;

    std::vector<supervisor::Signal> internal_;
    std::vector<supervisor::Signal> operator_;
    std::vector<Jog> jogs_;
    std::size_t next_scheduled_ = 0;

    // Search (X1/X4)
    int search_attempt_ = 0;
    double settled_since_ = -1.0;
    // Servo (X2/X5)
    ServoPhase phase_ = ServoPhase::Servo;
    std::vector<vision::ErrorSample> history_;
    // Dwell (X3/X6)
    double entered_at_ = 0.0;
    bool dwell_reported_ = false;

    double min_servo_error_;
    std::array<std::optional<double>, supervisor::kNumStates> first_entry_{};
};

}  // namespace feedarm::sim
