#include "feedarm/dynamics.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>

namespace feedarm::dynamics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Horizontal-arm gravity torques as affine functions of the payload:
// T_j(W_L) = base[j] + arm[j] * W_L.
struct AffineTorques {
    std::array<double, kNumJoints> base{};
    std::array<double, kNumJoints> arm{};
};

AffineTorques horizontal_sums(const LinkParams& p, GravityVariant variant) {
    AffineTorques s;
    if (variant == GravityVariant::WithJoint4) {
        s.base[1] = p.W2 * (p.L2 / 2.0) + p.WJ3 * p.L2 + p.W3 * (p.L2 + p.L3 / 2.0) + p.WJ4 * (p.L2 + p.L3) +
                    p.W4 * (p.L2 + p.L3 + p.L4 / 2.0);
        s.arm[1] = p.L2 + p.L3 + p.L4;
        s.base[2] = p.W3 * (p.L3 / 2.0) + p.WJ4 * p.L3 + p.W4 * (p.L3 + p.L4 / 2.0);
        s.arm[2] = p.L3 + p.L4;
        s.base[3] = p.W4 * (p.L4 / 2.0);
        s.arm[3] = p.L4;
    } else {
        s.base[1] = p.W2 * (p.L2 / 2.0) + p.WJ3 * p.L2 + p.W3 * (p.L2 + p.L3 / 2.0) + p.WJ4 * (p.L2 + p.L3);
        s.arm[1] = p.L2 + p.L3;
        s.base[2] = p.W3 * (p.L3 / 2.0) + p.WJ4 * p.L3;
        s.arm[2] = p.L3;
    }
    return s;
}

TorqueReport evaluate(const AffineTorques& s, double payload) {
    TorqueReport r;
    r.payload = payload;
    for (int j = 0; j < kNumJoints; ++j) {
        r.torque[j] = s.base[j] + s.arm[j] * payload;
    }
    r.joint_payload_limit.fill(kInf);
    return r;
}

// Smallest per-joint payload bound; capacity[j] < 0 marks an unconstrained joint.
TorqueReport solve_payload(const AffineTorques& s, const std::array<double, kNumJoints>& capacity) {
    std::array<double, kNumJoints> limit;
    limit.fill(kInf);
    int binding = 0;
    double best = kInf;
    for (int j = 0; j < kNumJoints; ++j) {
        if (capacity[j] < 0.0 || s.arm[j] <= 0.0) {
            continue;
        }
        limit[j] = std::max(0.0, (capacity[j] - s.base[j]) / s.arm[j]);
        if (limit[j] < best) {
            best = limit[j];
            binding = j + 1;
        }
    }
    TorqueReport r = evaluate(s, binding == 0 ? 0.0 : best);
    r.binding_joint = binding;
    r.joint_payload_limit = limit;
    return r;
}

}  // namespace

void LinkParams::validate() const {
    for (double len : {L0, L1, L2, L3, L4}) {
        if (!(len > 0.0)) {
            throw Error(ErrorCode::ValidationError, "link lengths must be positive");
        }
    }
    if (!(eta_belt > 0.0 && eta_belt <= 1.0)) {
        throw Error(ErrorCode::ValidationError, "belt efficiency must lie in (0, 1]");
    }
}

TorqueReport gravity_torques(const LinkParams& p, double payload, GravityVariant variant) {
    if (payload < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "payload weight must be non-negative");
    }
    return evaluate(horizontal_sums(p, variant), payload);
}

TorqueReport max_payload_static(const LinkParams& p, GravityVariant variant) {
    const AffineTorques s = horizontal_sums(p, variant);
    // Joints 2 and 3 are belt driven; joint 4 sits directly on its motor.
    const std::array<double, kNumJoints> capacity{
        -1.0, p.drive_torque[1] * p.eta_belt, p.drive_torque[2] * p.eta_belt,
        variant == GravityVariant::WithJoint4 ? p.drive_torque[3] : -1.0};
    return solve_payload(s, capacity);
}

std::pair<double, double> inertia_moments(const LinkParams& p) {
    return {p.m2 * p.L2 * p.L2 / 3.0, p.m3 * p.L3 * p.L3 / 3.0};
}

std::array<double, kNumJoints> joint_inertias(const LinkParams& p) {
    const auto [i2, i3] = inertia_moments(p);
    return {p.joint1_inertia.value_or(i2), i2, i3, p.joint4_inertia};
}

TorqueReport max_payload_dynamic(const LinkParams& p) {
    AffineTorques s = horizontal_sums(p, GravityVariant::Reduced);
    const auto [i2, i3] = inertia_moments(p);
    s.base[1] += i2 * p.alpha_max;
    s.base[2] += i3 * p.alpha_max;
    const std::array<double, kNumJoints> capacity{-1.0, p.drive_torque[1] * p.eta_belt,
                                                  p.drive_torque[2] * p.eta_belt, -1.0};
    return solve_payload(s, capacity);
}

std::vector<ProfileSample> trapezoidal_profile(const JointVector& q0, const JointVector& qf, double duration,
                                               double dt) {
    if (!(duration > 0.0) || !(dt > 0.0) || dt > duration / 4.0) {
        throw Error(ErrorCode::BadTiming, "trapezoidal profile needs duration > 0 and 0 < dt <= duration/4");
    }
    const double t1 = duration / 3.0;
    const double t2 = 2.0 * duration / 3.0;
    const auto steps = static_cast<long>(std::ceil(duration / dt - 1e-9));

    std::vector<ProfileSample> out;
    out.reserve(static_cast<std::size_t>(steps) + 1);
    for (long k = 0; k <= steps; ++k) {
        const double t = k == steps ? duration : static_cast<double>(k) * dt;
        ProfileSample s;
        s.t = t;
        for (int j = 0; j < kNumJoints; ++j) {
            const double delta = qf[j] - q0[j];
            const double v_peak = delta / (duration - t1);  // cruise lasts one third
            const double acc = v_peak / t1;
            if (t < t1) {
                s.q[j] = q0[j] + 0.5 * acc * t * t;
                s.qd[j] = acc * t;
                s.qdd[j] = acc;
            } else if (t <= t2) {
                s.q[j] = q0[j] + 0.5 * acc * t1 * t1 + v_peak * (t - t1);
                s.qd[j] = v_peak;
                s.qdd[j] = 0.0;
            } else {
                const double rem = duration - t;
                s.q[j] = qf[j] - 0.5 * acc * rem * rem;
                s.qd[j] = acc * rem;
                s.qdd[j] = -acc;
            }
        }
        out.push_back(s);
    }
    return out;
}

std::array<double, kNumJoints> gravity_load(const LinkParams& p, const JointVector& q, double payload) {
    const double h2 = p.L2 * std::cos(q[1]);
    const double h3 = p.L3 * std::cos(q[1] + q[2]);
    const double h4 = p.L4 * std::cos(q[1] + q[2] + q[3]);
    std::array<double, kNumJoints> g{};
    g[1] = p.W2 * (h2 / 2.0) + p.WJ3 * h2 + p.W3 * (h2 + h3 / 2.0) + p.WJ4 * (h2 + h3) +
           p.W4 * (h2 + h3 + h4 / 2.0) + payload * (h2 + h3 + h4);
    g[2] = p.W3 * (h3 / 2.0) + p.WJ4 * h3 + p.W4 * (h3 + h4 / 2.0) + payload * (h3 + h4);
    g[3] = p.W4 * (h4 / 2.0) + payload * h4;
    return g;
}

std::array<double, kNumJoints> inverse_dynamics(const LinkParams& p, const ProfileSample& sample, double payload) {
    const auto g = gravity_load(p, sample.q, payload);
    const auto inertia = joint_inertias(p);
    std::array<double, kNumJoints> tau{};
    for (int j = 0; j < kNumJoints; ++j) {
        tau[j] = g[j] + inertia[j] * sample.qdd[j];
    }
    return tau;
}

JointState forward_dynamics_step(const LinkParams& p, const JointState& state,
                                 const std::array<double, kNumJoints>& torque, double dt, double payload) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::BadTiming, "integration step must be positive");
    }
    const auto g = gravity_load(p, state.q, payload);
    const auto inertia = joint_inertias(p);
    JointState next = state;
    for (int j = 0; j < kNumJoints; ++j) {
        const double qdd = (torque[j] - g[j]) / inertia[j];
        next.qd[j] = state.qd[j] + qdd * dt;
        next.q[j] = state.q[j] + next.qd[j] * dt;
    }
    return next;
}

JointState track_profile(const LinkParams& p, const std::vector<ProfileSample>& profile, double payload) {
    if (profile.empty()) {
        return {};
    }
    JointState state{profile.front().q, profile.front().qd};
    for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
        const double h = profile[k + 1].t - profile[k].t;
        ProfileSample demand = profile[k];
        demand.q = state.q;
        demand.qd = state.qd;
        state = forward_dynamics_step(p, state, inverse_dynamics(p, demand, payload), h, payload);
    }
    return state;
}

void write_trajectory_csv(const std::vector<ProfileSample>& profile, std::ostream& out) {
    out << "t,q1,q2,q3,q4,qd1,qd2,qd3,qd4,qdd1,qdd2,qdd3,qdd4\n";
    const auto prec = out.precision(10);
    for (const ProfileSample& s : profile) {
        out << s.t;
        for (const JointVector* v : {&s.q, &s.qd, &s.qdd}) {
            for (int j = 0; j < kNumJoints; ++j) {
                out << ',' << (*v)[j];
            }
        }
        out << '\n';
    }
    out.precision(prec);
}

}  // namespace feedarm::dynamics
