#include "feedarm/vision_servo.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace feedarm::vision {

namespace {

template <std::size_t N>
std::array<double, N> read_data(const YAML::Node& root, const char* key) {
    const YAML::Node node = root[key];
    if (!node || !node["data"] || !node["data"].IsSequence()) {
        throw Error(ErrorCode::ParseError, std::string("calibration: missing ") + key + ".data");
    }
    const YAML::Node data = node["data"];
    if (data.size() != N) {
        throw Error(ErrorCode::ValidationError, std::string("calibration: ") + key + ".data needs " +
                                                    std::to_string(N) + " values, got " +
                                                    std::to_string(data.size()));
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = data[i].as<double>();
    }
    return out;
}

}  // namespace

CalibrationFile parse_calibration(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::ParseError, std::string("calibration: ") + e.what());
    }
    if (!root.IsMap()) {
        throw Error(ErrorCode::ParseError, "calibration: top level must be a mapping");
    }
    CalibrationFile cal;
    try {
        if (!root["image_width"] || !root["image_height"]) {
            throw Error(ErrorCode::ParseError, "calibration: missing image size");
        }
        cal.camera.width = root["image_width"].as<int>();
        cal.camera.height = root["image_height"].as<int>();
        if (root["camera_name"]) {
            cal.camera_name = root["camera_name"].as<std::string>();
        }
        cal.distortion_model = root["distortion_model"] ? root["distortion_model"].as<std::string>() : "plumb_bob";

        const auto k = read_data<9>(root, "camera_matrix");
        cal.camera.fx = k[0];
        cal.camera.cx = k[2];
        cal.camera.fy = k[4];
        cal.camera.cy = k[5];
        cal.camera.dist = read_data<5>(root, "distortion_coefficients");
        if (root["rectification_matrix"]) {
            cal.rectification = read_data<9>(root, "rectification_matrix");
        }
        if (root["projection_matrix"]) {
            cal.projection = read_data<12>(root, "projection_matrix");
        }
    } catch (const YAML::Exception& e) {
        throw Error(ErrorCode::ParseError, std::string("calibration: ") + e.what());
    }
    if (cal.distortion_model != "plumb_bob") {
        throw Error(ErrorCode::ValidationError, "calibration: only the plumb_bob model is supported");
    }
    if (cal.camera.width <= 0 || cal.camera.height <= 0 || !(cal.camera.fx > 0.0) || !(cal.camera.fy > 0.0)) {
        throw Error(ErrorCode::ValidationError, "calibration: image size and focal lengths must be positive");
    }
    return cal;
}

CalibrationFile load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open calibration file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_calibration(buf.str());
}

std::pair<double, double> distort_normalized(const CameraModel& cam, double x, double y) {
    const auto& [k1, k2, p1, p2, k3] = cam.dist;
    const double r2 = x * x + y * y;
    const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
    const double xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
    const double yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
    return {xd, yd};
}

Pixel project(const CameraModel& cam, const Vec3& p) {
    if (!(p.z() > 1e-6)) {
        throw Error(ErrorCode::BehindCamera, "point is not in front of the camera");
    }
    const auto [xd, yd] = distort_normalized(cam, p.x() / p.z(), p.y() / p.z());
    return {cam.fx * xd + cam.cx, cam.fy * yd + cam.cy};
}

Pixel project_pinhole(const CameraModel& cam, const Vec3& p) {
    if (!(p.z() > 1e-6)) {
        throw Error(ErrorCode::BehindCamera, "point is not in front of the camera");
    }
    return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy};
}

Pixel undistort_pixel(const CameraModel& cam, const Pixel& distorted) {
    const auto& [k1, k2, p1, p2, k3] = cam.dist;
    const double xd = (distorted.u - cam.cx) / cam.fx;
    const double yd = (distorted.v - cam.cy) / cam.fy;
    double x = xd;
    double y = yd;
    for (int it = 0; it < 20; ++it) {
        const auto [fx_, fy_] = distort_normalized(cam, x, y);
        const double ex = fx_ - xd;
        const double ey = fy_ - yd;
        if (std::abs(ex) * cam.fx < 1e-6 && std::abs(ey) * cam.fy < 1e-6) {
            break;
        }
        const double r2 = x * x + y * y;
        const double radial = 1.0 + r2 * (k1 + r2 * (k2 + r2 * k3));
        const double d_radial = k1 + r2 * (2.0 * k2 + 3.0 * r2 * k3);
        const double j11 = radial + 2.0 * x * x * d_radial + 2.0 * p1 * y + 6.0 * p2 * x;
        const double j12 = 2.0 * x * y * d_radial + 2.0 * p1 * x + 2.0 * p2 * y;
        const double j21 = j12;
        const double j22 = radial + 2.0 * y * y * d_radial + 6.0 * p1 * y + 2.0 * p2 * x;
        const double det = j11 * j22 - j12 * j21;
        x -= (j22 * ex - j12 * ey) / det;
        y -= (j11 * ey - j21 * ex) / det;
    }
    return {cam.fx * x + cam.cx, cam.fy * y + cam.cy};
}

double estimate_distance(double box_w, double box_h) {
    if (!(box_w > 0.0) || !(box_h > 0.0)) {
        throw Error(ErrorCode::EmptyBox, "detection box has no area");
    }
    return 250000.0 / (box_w * box_h);
}

NoseDetection detect_target_sim(const CameraModel& cam, const Transform& cam_pose_world, const Vec3& nose_world,
                                double noise_px, CounterRng& rng) {
    const Vec3 p = cam_pose_world.inverse().apply(nose_world);
    if (!(p.z() > 1e-6)) {
        return {};
    }
    Pixel px = project(cam, p);
    if (noise_px > 0.0) {
        px.u += rng.normal(0.0, noise_px);
        px.v += rng.normal(0.0, noise_px);
    }
    if (px.u < 0.0 || px.u >= cam.width || px.v < 0.0 || px.v >= cam.height) {
        return {};
    }
    NoseDetection d;
    d.found = true;
    d.x_offset = px.u - cam.width / 2.0;
    d.y_offset = cam.height / 2.0 - px.v;
    d.distance = p.norm() * 100.0;
    // Square box whose area reproduces the range through estimate_distance.
    d.box_w = d.box_h = std::sqrt(250000.0 / d.distance);
    return d;
}

void ServoConfig::validate() const {
    if (!(x_sensitivity > 0.0) || !(y_sensitivity > 0.0) || !(radius_threshold > 0.0) || !(stable_duration > 0.0) ||
        !(rotation_factor_init > 0.0) || !(rotation_increment > 0.0)) {
        throw Error(ErrorCode::ValidationError, "servo gains, thresholds and sweep steps must be positive");
    }
    if (initial_direction != -1 && initial_direction != 1) {
        throw Error(ErrorCode::ValidationError, "initial_direction must be -1 or +1");
    }
    if (max_search_attempts < 1 || max_plan_attempts < 1) {
        throw Error(ErrorCode::ValidationError, "attempt limits must be >= 1");
    }
    if (!(plan_tolerance_mm >= 0.0)) {
        throw Error(ErrorCode::ValidationError, "plan_tolerance_mm must be >= 0");
    }
}

double ibvs_error(const NoseDetection& d) {
    if (!d.found) {
        throw Error(ErrorCode::NotFound, "no detection");
    }
    return std::hypot(d.x_offset, d.y_offset);
}

JointVector ibvs_step(const JointVector& q, const NoseDetection& d, const ServoConfig& cfg,
                      const kinematics::DHTable& table) {
    if (!d.found) {
        throw Error(ErrorCode::NotFound, "no detection");
    }
    JointVector next = q;
    next[0] += d.x_offset * cfg.x_sensitivity;
    next[1] += d.y_offset * cfg.y_sensitivity;
    for (int j = 0; j < 2; ++j) {
        next[j] = std::clamp(next[j], table.rows[j].limit_lo, table.rows[j].limit_hi);
    }
    return next;
}

double search_sweep(int attempt, const ServoConfig& cfg) {
    if (attempt < 0) {
        throw Error(ErrorCode::InvalidArgument, "search attempt must be >= 0");
    }
    const double factor = cfg.rotation_factor_init + cfg.rotation_increment * attempt;
    const int direction = attempt % 2 == 0 ? cfg.initial_direction : -cfg.initial_direction;
    return direction * factor * kDegToRad;
}

bool stability_gate(const std::vector<ErrorSample>& history, const ServoConfig& cfg, double now) {
    if (history.empty() || history.back().s > cfg.radius_threshold) {
        return false;
    }
    double window_start = history.back().t;
    for (auto it = history.rbegin(); it != history.rend() && it->s <= cfg.radius_threshold; ++it) {
        window_start = it->t;
    }
    return now - window_start >= cfg.stable_duration;
}

Transform hand_eye_compose(const HandEyeChain& chain) {
    return chain.cam_from_calib * chain.calib_from_base * chain.base_from_hand;
}

Transform camera_link_mount() {
    // Link-3 mesh frame: origin 120 mm behind DH frame 3 along its x axis,
    // x along -z3, z along x3.
    Transform link3;
    link3.rotation << 0.0, 0.0, 1.0,
                      0.0, 1.0, 0.0,
                      -1.0, 0.0, 0.0;
    link3.translation << -120.0, 0.0, 0.0;
    const Transform joint{rot_rpy(1.5498, 0.0, 0.0), Vec3(55.5, -44.098, 115.59)};
    return link3 * joint;
}

Transform camera_optical_mount() {
    Transform optical;
    optical.rotation << -1.0, 0.0, 0.0,
                        0.0, 0.0, 1.0,
                        0.0, 1.0, 0.0;
    return camera_link_mount() * optical;
}

Vec3 feed_target_camera_link(const NoseDetection& d, double shrink) {
    // y_offset is y-up; Camera_Link z points down.
    return {-d.x_offset * 0.005, d.distance * 0.0080 * shrink, -(d.y_offset + 10.0) * 0.005};
}

double plan_shrink(int attempt) {
    return attempt <= 0 ? 1.0 : 1.0 - 0.1 * attempt;
}

}  // namespace feedarm::vision
