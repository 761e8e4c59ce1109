#pragma once

#include "feedarm/common.hpp"
#include "feedarm/kinematics.hpp"
#include "feedarm/rng.hpp"

#include <string>
#include <utility>
#include <vector>

namespace feedarm::vision {

/// Pinhole intrinsics with plumb-bob distortion (k1, k2, p1, p2, k3).
struct CameraModel {
    double fx = 1410.98768, fy = 1411.54333;
    double cx = 153.16333, cy = 312.17826;
    std::array<double, 5> dist{-0.091805, 0.008574, 0.002489, -0.030940, 0.0};
    int width = 640, height = 480;
};

struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

struct CalibrationFile {
    std::string camera_name;
    std::string distortion_model;
    CameraModel camera;
    std::array<double, 9> rectification{1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 12> projection{};
};

/// Parses the ROS camera_info text layout (image_width, camera_matrix.data, ...).
/// Throws Error{ParseError} on malformed input and Error{ValidationError} on bad values.
CalibrationFile parse_calibration(const std::string& text);
CalibrationFile load_calibration(const std::string& path);

/// Normalized pinhole coordinates (x, y) -> distorted normalized coordinates.
std::pair<double, double> distort_normalized(const CameraModel& cam, double x, double y);

/// Camera-frame point (z forward, m) -> distorted pixel. Throws Error{BehindCamera} for z <= 1e-6.
Pixel project(const CameraModel& cam, const Vec3& point_cam);

/// Pinhole (undistorted) pixel of a camera-frame point.
Pixel project_pinhole(const CameraModel& cam, const Vec3& point_cam);

/// Newton inversion of the distortion: distorted pixel -> pinhole pixel.
/// At most 20 iterations, stops once the residual is under 1e-6 px.
Pixel undistort_pixel(const CameraModel& cam, const Pixel& distorted);

struct NoseDetection {
    double x_offset = 0.0;  // px, right of the image center
    double y_offset = 0.0;  // px, above the image center
    double distance = 0.0;  // cm
    double box_w = 0.0;
    double box_h = 0.0;
    bool found = false;
};

/// 250000 / (w h), cm. Throws Error{EmptyBox} unless both sides are positive.
double estimate_distance(double box_w, double box_h);

/// Geometric stand-in for the face detector. `cam_pose_world` maps optical-frame
/// points (m) to world (m). Pixel noise is drawn from `rng` only when noise_px > 0.
NoseDetection detect_target_sim(const CameraModel& cam, const Transform& cam_pose_world, const Vec3& nose_world,
                                double noise_px, CounterRng& rng);

struct ServoConfig {
    double x_sensitivity = 0.001;  // rad/px
    double y_sensitivity = 0.001;  // rad/px
    double radius_threshold = 20.0;  // px
    double stable_duration = 3.0;    // s
    double rotation_factor_init = 5.0;  // deg
    double rotation_increment = 10.0;   // deg
    int initial_direction = -1;
    int max_search_attempts = 10;
    int max_plan_attempts = 10;
    double plan_tolerance_mm = 100.0;  // goal position tolerance

    void validate() const;
};

/// s = sqrt(x_offset^2 + y_offset^2). Throws Error{NotFound} if nothing was detected.
double ibvs_error(const NoseDetection& d);

/// q1 += x_offset * x_sensitivity, q2 += y_offset * y_sensitivity, clamped to the table limits.
JointVector ibvs_step(const JointVector& q, const NoseDetection& d, const ServoConfig& cfg,
                      const kinematics::DHTable& table = kinematics::DHTable::standard());

/// Base rotation for search attempt k: (factor_init + k * increment) degrees, direction
/// starting at initial_direction and flipping each attempt.
double search_sweep(int attempt, const ServoConfig& cfg = {});

struct ErrorSample {
    double t = 0.0;
    double s = 0.0;
};

/// True once s has stayed within the radius for at least stable_duration, ending at `now`.
bool stability_gate(const std::vector<ErrorSample>& history, const ServoConfig& cfg, double now);

struct HandEyeChain {
    Transform cam_from_calib;
    Transform calib_from_base;
    Transform base_from_hand;
};

Transform hand_eye_compose(const HandEyeChain& chain);

/// Camera_Link frame (x left, y forward, z down) relative to DH frame 3, mm.
Transform camera_link_mount();

/// Optical frame (x right, y down, z forward) relative to DH frame 3, mm.
Transform camera_optical_mount();

/// Approach point for a stable detection, in Camera_Link coordinates (m).
/// `shrink` scales the forward reach; 1 on the first plan.
Vec3 feed_target_camera_link(const NoseDetection& d, double shrink);

/// Forward-reach scale for plan attempt k: 1 for k = 0, then 1 - 0.1 k.
double plan_shrink(int attempt);

}  // namespace feedarm::vision
