#pragma once

#include "feedarm/common.hpp"
#include "feedarm/dynamics.hpp"
#include "feedarm/motor_control.hpp"
#include "feedarm/supervisor.hpp"
#include "feedarm/vision_servo.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace feedarm::sim {

struct ScheduledSignal {
    double t = 0.0;
    supervisor::Signal u = supervisor::Signal::u1;
    bool operator==(const ScheduledSignal&) const = default;
};

// Joint coordinates here are the simulator's: the base joint turns about -z, so
// DH theta = (-q1, q2, q3, q4). Positions are in metres.
struct Scenario {
    std::string name = "unnamed";
    Vec3 nose_world = Vec3::Zero();
    Vec3 nose_drift = Vec3::Zero();  // m/s
    Vec3 food_world = Vec3::Zero();
    JointVector initial_q;
    JointVector detect_pose{{0.0, 60.0 * kDegToRad, -60.0 * kDegToRad, 0.0}};
    double dt = 0.01;
    std::uint64_t seed = 1;
    double noise_px = 0.0;
    double payload_n = 0.0;
    bool grasp_succeeds = true;
    double settle_s = 0.5;       // pause after a search move before looking
    double grasp_dwell_s = 2.0;
    double feed_dwell_s = 3.0;
    std::vector<ScheduledSignal> signals;

    vision::CameraModel camera;
    vision::ServoConfig servo;
    motor::StepperPlan stepper;
    motor::CascadeGains cascade;
    dynamics::LinkParams links;

    /// Throws Error{ValidationError} naming the offending field.
    void validate() const;
};

/// Throws Error{ParseError} with the byte offset of the fault, Error{ValidationError}
/// for well-formed files that break a constraint.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);

/// Every field written out, so parse(save(s)) == s.
std::string save_scenario(const Scenario& s);
void save_scenario_file(const Scenario& s, const std::string& path);

bool operator==(const Scenario& a, const Scenario& b);

}  // namespace feedarm::sim
