#include "feedarm/kinematics.hpp"

#include "feedarm/rng.hpp"

#include <algorithm>
#include <iomanip>

namespace feedarm {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::SingularBase: return "SingularBase";
    case ErrorCode::BadTiming: return "BadTiming";
    case ErrorCode::ZeroInterval: return "ZeroInterval";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BindError: return "BindError";
    }
    return "Unknown";
}

}  // namespace feedarm

namespace feedarm::kinematics {

namespace {

double wrap_pi(double a) {
    a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
    return a <= -kPi ? a + 2.0 * kPi : a;
}

struct PlanarSolution {
    bool reachable = false;
    double q2 = 0.0;
    double q3 = 0.0;
};

// Two-link solve for the wrist point (radial, height) relative to the shoulder.
PlanarSolution solve_elbow(double radial, double height, double a2, double a3) {
    const double c3 = (radial * radial + height * height - a2 * a2 - a3 * a3) / (2.0 * a2 * a3);
    if (std::abs(c3) > 1.0 + 1e-12) {
        return {};
    }
    const double c3c = std::clamp(c3, -1.0, 1.0);
    const double s3 = std::sqrt(1.0 - c3c * c3c);
    const double q3 = std::atan2(s3, c3c);
    const double q2 = std::atan2(height, radial) - std::atan2(a3 * s3, a2 + a3 * c3c);
    return {true, wrap_pi(q2), q3};
}

}  // namespace

DHTable DHTable::standard() {
    DHTable t;
    t.rows[0] = {0.0, 155.5, 0.0, kPi / 2.0, -180.0 * kDegToRad, 180.0 * kDegToRad};
    t.rows[1] = {0.0, 74.0, 144.0, 0.0, -144.0 * kDegToRad, 144.0 * kDegToRad};
    t.rows[2] = {0.0, -67.7, 120.0, 0.0, -155.0 * kDegToRad, 155.0 * kDegToRad};
    t.rows[3] = {0.0, -6.0, 63.0, 0.0, -180.0 * kDegToRad, 180.0 * kDegToRad};
    return t;
}

Transform dh_transform(const DHRow& row, double theta) {
    const double th = theta + row.theta_offset;
    const double ct = std::cos(th);
    const double st = std::sin(th);
    const double ca = std::cos(row.alpha);
    const double sa = std::sin(row.alpha);
    Transform t;
    t.rotation << ct, -st * ca, st * sa,
                  st, ct * ca, -ct * sa,
                  0.0, sa, ca;
    t.translation << row.a * ct, row.a * st, row.d;
    return t;
}

bool within_limits(const DHTable& table, const JointVector& q) {
    for (int i = 0; i < kNumJoints; ++i) {
        const auto& r = table.rows[i];
        if (q[i] < r.limit_lo || q[i] > r.limit_hi) {
            return false;
        }
    }
    return true;
}

Transform chain_transform(const DHTable& table, const JointVector& q, int frames) {
    Transform t;
    for (int i = 0; i < std::clamp(frames, 0, kNumJoints); ++i) {
        t = t * dh_transform(table.rows[i], q[i]);
    }
    return t;
}

FkResult forward_kinematics(const DHTable& table, const JointVector& q) {
    return {chain_transform(table, q, kNumJoints), within_limits(table, q)};
}

Vec3 closed_form_position(const JointVector& q, const DHTable& table) {
    const double d1 = table.rows[0].d;
    const double a2 = table.rows[1].a;
    const double a3 = table.rows[2].a;
    const double a4 = table.rows[3].a;
    const double q23 = q[1] + q[2];
    const double q234 = q23 + q[3];
    const double radial = a2 * std::cos(q[1]) + a3 * std::cos(q23) + a4 * std::cos(q234);
    const double height = a2 * std::sin(q[1]) + a3 * std::sin(q23) + a4 * std::sin(q234);
    return {std::cos(q[0]) * radial, std::sin(q[0]) * radial, d1 + height};
}

JointVector inverse_kinematics(const Vec3& target, double theta_234, const DHTable& table) {
    const double d1 = table.rows[0].d;
    const double a2 = table.rows[1].a;
    const double a3 = table.rows[2].a;
    const double a4 = table.rows[3].a;

    const double rho = std::hypot(target.x(), target.y());
    if (rho < 1e-12) {
        throw Error(ErrorCode::SingularBase, "target on the base axis: q1 undefined");
    }
    const double height = target.z() - d1 - a4 * std::sin(theta_234);
    const double q1 = std::atan2(target.y(), target.x());

    // Facing the target first; if the wrist is out of reach that way, try reaching
    // back over the base.
    for (const double side : {1.0, -1.0}) {
        const double radial = side * rho - a4 * std::cos(theta_234);
        const PlanarSolution s = solve_elbow(radial, height, a2, a3);
        if (!s.reachable) {
            continue;
        }
        JointVector q;
        q[0] = side > 0.0 ? q1 : wrap_pi(q1 + kPi);
        q[1] = s.q2;
        q[2] = s.q3;
        q[3] = theta_234 - s.q2 - s.q3;
        return q;
    }
    throw Error(ErrorCode::Unreachable, "target outside the reachable annulus");
}

Vec3 nearest_reachable(const Vec3& target, double theta_234, const DHTable& table) {
    const double d1 = table.rows[0].d;
    const double a2 = table.rows[1].a;
    const double a3 = table.rows[2].a;
    const double a4 = table.rows[3].a;
    const double rho = std::hypot(target.x(), target.y());
    if (rho < 1e-12) {
        throw Error(ErrorCode::SingularBase, "target on the base axis: q1 undefined");
    }
    const double radial = rho - a4 * std::cos(theta_234);
    const double height = target.z() - d1 - a4 * std::sin(theta_234);
    const double n = std::hypot(radial, height);
    const double lo = std::abs(a2 - a3) * (1.0 + 1e-9);
    const double hi = (a2 + a3) * (1.0 - 1e-9);
    if (n >= lo && n <= hi) {
        return target;
    }
    const double scale = n > 0.0 ? std::clamp(n, lo, hi) / n : 0.0;
    const double r = n > 0.0 ? radial * scale : lo;
    const double h = height * scale;
    const double reach = r + a4 * std::cos(theta_234);
    return {reach * target.x() / rho, reach * target.y() / rho, h + d1 + a4 * std::sin(theta_234)};
}

Jacobian jacobian(const JointVector& q, const DHTable& table) {
    const double a2 = table.rows[1].a;
    const double a3 = table.rows[2].a;
    const double a4 = table.rows[3].a;
    const double c1 = std::cos(q[0]);
    const double s1 = std::sin(q[0]);
    const double q23 = q[1] + q[2];
    const double q234 = q23 + q[3];

    const double radial = a2 * std::cos(q[1]) + a3 * std::cos(q23) + a4 * std::cos(q234);
    // d(radial)/dq_j and d(height)/dq_j for j = 2..4
    const std::array<double, 3> d_radial{
        -(a2 * std::sin(q[1]) + a3 * std::sin(q23) + a4 * std::sin(q234)),
        -(a3 * std::sin(q23) + a4 * std::sin(q234)),
        -a4 * std::sin(q234)};
    const std::array<double, 3> d_height{
        a2 * std::cos(q[1]) + a3 * std::cos(q23) + a4 * std::cos(q234),
        a3 * std::cos(q23) + a4 * std::cos(q234),
        a4 * std::cos(q234)};

    Jacobian j;
    j.col(0) << -s1 * radial, c1 * radial, 0.0;
    for (int k = 0; k < 3; ++k) {
        j.col(k + 1) << c1 * d_radial[k], s1 * d_radial[k], d_height[k];
    }
    return j;
}

int mobility_degree(int n_links, int pairs_class5) {
    if (n_links < 0 || pairs_class5 < 0) {
        throw Error(ErrorCode::InvalidArgument, "link and pair counts must be non-negative");
    }
    return 6 * n_links - 5 * pairs_class5;
}

WorkspaceCloud sample_workspace(int count, std::uint64_t seed, const DHTable& table) {
    if (count < 1) {
        throw Error(ErrorCode::InvalidArgument, "workspace sample count must be >= 1");
    }
    const CounterRng rng(seed);
    WorkspaceCloud cloud;
    cloud.seed = seed;
    cloud.count = count;
    cloud.points.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        JointVector q;
        for (int j = 0; j < kNumJoints; ++j) {
            const auto& r = table.rows[j];
            const double u = rng.uniform_at(static_cast<std::uint64_t>(i) * kNumJoints + j);
            q[j] = r.limit_lo + (r.limit_hi - r.limit_lo) * u;
        }
        cloud.points.push_back(forward_kinematics(table, q).pose.translation);
    }
    return cloud;
}

void write_workspace_csv(const WorkspaceCloud& cloud, std::ostream& out) {
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << "x_mm,y_mm,z_mm\n" << std::setprecision(6);
    out.unsetf(std::ios::floatfield);
    for (const Vec3& p : cloud.points) {
        out << p.x() << ',' << p.y() << ',' << p.z() << '\n';
    }
    out.flags(flags);
    out.precision(prec);
}

}  // namespace feedarm::kinematics
