#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace feedarm {

constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kRadToDeg = 180.0 / kPi;
constexpr int kNumJoints = 4;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode {
    Ok = 0,
    InvalidArgument,
    Unreachable,
    SingularBase,
    BadTiming,
    ZeroInterval,
    BehindCamera,
    EmptyBox,
    NotFound,
    ParseError,
    ValidationError,
    IoError,
    BindError,
};

const char* error_code_name(ErrorCode code);

// Every recoverable failure in the library carries one of the codes above so the
// C boundary can translate it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct JointVector {
    std::array<double, kNumJoints> q{0.0, 0.0, 0.0, 0.0};

    double& operator[](std::size_t i) { return q[i]; }
    double operator[](std::size_t i) const { return q[i]; }
    bool operator==(const JointVector&) const = default;
};

/// Rigid transform: rotation (orthonormal, det +1) followed by translation.
struct Transform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Transform identity() { return {}; }
    static Transform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

    Transform operator*(const Transform& rhs) const {
        return {rotation * rhs.rotation, rotation * rhs.translation + translation};
    }
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Transform inverse() const {
        const Mat3 rt = rotation.transpose();
        return {rt, -(rt * translation)};
    }
    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }
    // Orthonormality residual and determinant check.
    bool is_valid(double tol = 1e-9) const {
        const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
        return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
    }
};

inline Mat3 rot_x(double a) {
    return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix();
}
inline Mat3 rot_y(double a) {
    return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix();
}
inline Mat3 rot_z(double a) {
    return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix();
}

// URDF-style fixed-axis roll/pitch/yaw: R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rot_rpy(double roll, double pitch, double yaw) {
    return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

}  // namespace feedarm
