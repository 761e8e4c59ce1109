#pragma once

#include "feedarm/common.hpp"

#include <cstdint>
#include <ostream>
#include <vector>

namespace feedarm::kinematics {

/// One Denavit-Hartenberg row (standard convention, lengths in mm).
struct DHRow {
    double theta_offset = 0.0;
    double d = 0.0;
    double a = 0.0;
    double alpha = 0.0;
    double limit_lo = -kPi;
    double limit_hi = kPi;
};

struct DHTable {
    std::array<DHRow, kNumJoints> rows;

    /// The arm's four-row table: d = (155.5, 74, -67.7, -6) mm, a = (0, 144, 120, 63) mm,
    /// alpha = (pi/2, 0, 0, 0), limits (+-180, +-144, +-155, +-180) deg.
    static DHTable standard();
};

struct FkResult {
    Transform pose;
    bool within_limits = true;
};

struct WorkspaceCloud {
    std::vector<Vec3> points;
    std::uint64_t seed = 0;
    int count = 0;
};

using Jacobian = Eigen::Matrix<double, 3, kNumJoints>;

Transform dh_transform(const DHRow& row, double theta);

bool within_limits(const DHTable& table, const JointVector& q);

/// Pose of frame `frames` (1..4) relative to the base: the product of the first
/// `frames` link matrices.
Transform chain_transform(const DHTable& table, const JointVector& q, int frames);

FkResult forward_kinematics(const DHTable& table, const JointVector& q);

// Position model used by the analytic IK: planar chain a2, a3, a4 rotated by q1,
// lateral d-offsets dropped. Positive q2..q4 raise the arm, as in the DH product.
Vec3 closed_form_position(const JointVector& q, const DHTable& table = DHTable::standard());

/// Analytic IK for a position and the summed pitch q2+q3+q4. The elbow branch is
/// fixed to sin(q3) >= 0. Throws Error{SingularBase} on the base axis and
/// Error{Unreachable} when |cos q3| > 1 + 1e-12.
JointVector inverse_kinematics(const Vec3& target_mm, double theta_234,
                               const DHTable& table = DHTable::standard());

/// Closest point to target_mm, on the side facing it, whose wrist lies inside the
/// reachable annulus for pitch theta_234. Returns the target itself when it is reachable.
Vec3 nearest_reachable(const Vec3& target_mm, double theta_234, const DHTable& table = DHTable::standard());

/// d(closed_form_position)/dq, mm/rad.
Jacobian jacobian(const JointVector& q, const DHTable& table = DHTable::standard());

/// Somov-Malyshev mobility of a spatial chain with only class-5 pairs: 6n - 5p5.
int mobility_degree(int n_links, int pairs_class5);

WorkspaceCloud sample_workspace(int count, std::uint64_t seed, const DHTable& table = DHTable::standard());

/// CSV `x_mm,y_mm,z_mm`, 6 significant digits.
void write_workspace_csv(const WorkspaceCloud& cloud, std::ostream& out);

}  // namespace feedarm::kinematics
