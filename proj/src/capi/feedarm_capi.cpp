#include "feedarm/feedarm.h"

#include "feedarm/dynamics.hpp"
#include "feedarm/kinematics.hpp"
#include "feedarm/motor_control.hpp"
#include "feedarm/sim/run_log.hpp"
#include "feedarm/sim/service.hpp"
#include "feedarm/sim/world.hpp"
#include "feedarm/supervisor.hpp"
#include "feedarm/vision_servo.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

using namespace feedarm;

struct fa_sim {
    std::unique_ptr<sim::Simulator> sim;
};

struct fa_service {
    std::unique_ptr<sim::Service> service;
};

namespace {

thread_local std::string g_last_error;

fa_status to_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::Ok: return FA_OK;
    case ErrorCode::InvalidArgument: return FA_INVALID_ARGUMENT;
    case ErrorCode::Unreachable: return FA_UNREACHABLE;
    case ErrorCode::SingularBase: return FA_SINGULAR_BASE;
    case ErrorCode::BadTiming: return FA_BAD_TIMING;
    case ErrorCode::ZeroInterval: return FA_ZERO_INTERVAL;
    case ErrorCode::BehindCamera: return FA_BEHIND_CAMERA;
    case ErrorCode::EmptyBox: return FA_EMPTY_BOX;
    case ErrorCode::NotFound: return FA_NOT_FOUND;
    case ErrorCode::ParseError: return FA_PARSE_ERROR;
    case ErrorCode::ValidationError: return FA_VALIDATION_ERROR;
    case ErrorCode::IoError: return FA_IO_ERROR;
    case ErrorCode::BindError: return FA_BIND_ERROR;
    }
    return FA_INTERNAL_ERROR;
}

fa_status fail(fa_status status, const char* what) {
    g_last_error = what;
    return status;
}

// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
fa_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return FA_OK;
    } catch (const Error& e) {
        return fail(to_status(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(FA_INTERNAL_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(FA_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail(FA_INTERNAL_ERROR, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

JointVector joints(const double q[4]) {
    return JointVector{{q[0], q[1], q[2], q[3]}};
}

void require(bool ok, const char* what) {
    if (!ok) {
        throw Error(ErrorCode::InvalidArgument, what);
    }
}

}  // namespace

extern "C" {

const char* fa_version(void) {
    return "1.0.0";
}

const char* fa_status_name(fa_status status) {
    switch (status) {
    case FA_OK: return "FA_OK";
    case FA_INVALID_ARGUMENT: return "FA_INVALID_ARGUMENT";
    case FA_UNREACHABLE: return "FA_UNREACHABLE";
    case FA_SINGULAR_BASE: return "FA_SINGULAR_BASE";
    case FA_BAD_TIMING: return "FA_BAD_TIMING";
    case FA_ZERO_INTERVAL: return "FA_ZERO_INTERVAL";
    case FA_BEHIND_CAMERA: return "FA_BEHIND_CAMERA";
    case FA_EMPTY_BOX: return "FA_EMPTY_BOX";
    case FA_NOT_FOUND: return "FA_NOT_FOUND";
    case FA_PARSE_ERROR: return "FA_PARSE_ERROR";
    case FA_VALIDATION_ERROR: return "FA_VALIDATION_ERROR";
    case FA_IO_ERROR: return "FA_IO_ERROR";
    case FA_BIND_ERROR: return "FA_BIND_ERROR";
    case FA_INTERNAL_ERROR: return "FA_INTERNAL_ERROR";
    }
    return "FA_UNKNOWN";
}

const char* fa_last_error(void) {
    return g_last_error.c_str();
}

void fa_string_free(char* s) {
    std::free(s);
}

fa_status fa_forward_kinematics(const double q[4], double pose_out[16], int* within_limits) {
    return guarded([&] {
        require(q && pose_out, "null argument");
        const auto fk = kinematics::forward_kinematics(kinematics::DHTable::standard(), joints(q));
        const Eigen::Matrix4d m = fk.pose.matrix();
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                pose_out[r * 4 + c] = m(r, c);
            }
        }
        if (within_limits) {
            *within_limits = fk.within_limits ? 1 : 0;
        }
    });
}

fa_status fa_inverse_kinematics(const double target_mm[3], double theta_234, double q_out[4]) {
    return guarded([&] {
        require(target_mm && q_out, "null argument");
        const JointVector q =
            kinematics::inverse_kinematics(Vec3(target_mm[0], target_mm[1], target_mm[2]), theta_234);
        std::copy(q.q.begin(), q.q.end(), q_out);
    });
}

fa_status fa_jacobian(const double q[4], double jac_out[12]) {
    return guarded([&] {
        require(q && jac_out, "null argument");
        const auto j = kinematics::jacobian(joints(q));
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) {
                jac_out[r * 4 + c] = j(r, c);
            }
        }
    });
}

fa_status fa_mobility_degree(int n_links, int pairs_class5, int* out) {
    return guarded([&] {
        require(out, "null argument");
        *out = kinematics::mobility_degree(n_links, pairs_class5);
    });
}

fa_status fa_workspace_csv(int count, uint64_t seed, const char* path) {
    return guarded([&] {
        require(path, "null argument");
        const auto cloud = kinematics::sample_workspace(count, seed);
        std::ofstream out(path);
        if (!out) {
            throw Error(ErrorCode::IoError, std::string("cannot write ") + path);
        }
        kinematics::write_workspace_csv(cloud, out);
        if (!out) {
            throw Error(ErrorCode::IoError, std::string("write failed for ") + path);
        }
    });
}

fa_status fa_payload_report_default(fa_payload_report* out) {
    return guarded([&] {
        require(out, "null argument");
        const dynamics::LinkParams p;
        const double reference = 0.699;
        const auto g = dynamics::gravity_torques(p, reference);
        const auto st = dynamics::max_payload_static(p);
        const auto red = dynamics::max_payload_static(p, dynamics::GravityVariant::Reduced);
        const auto dyn = dynamics::max_payload_dynamic(p);
        const auto [i2, i3] = dynamics::inertia_moments(p);
        out->gravity_t2 = g.torque[1];
        out->gravity_t3 = g.torque[2];
        out->reference_payload = reference;
        out->max_static = st.payload;
        out->max_static_binding_joint = st.binding_joint;
        out->max_static_reduced = red.payload;
        out->max_dynamic = dyn.payload;
        out->max_dynamic_binding_joint = dyn.binding_joint;
        out->max_dynamic_joint3 = dyn.joint_payload_limit[2];
        out->inertia_i2 = i2;
        out->inertia_i3 = i3;
        out->tau2 = i2 * p.alpha_max;
        out->tau3 = i3 * p.alpha_max;
    });
}

fa_status fa_gravity_torques(double payload_n, int variant, double torques_out[4]) {
    return guarded([&] {
        require(torques_out, "null argument");
        require(variant == 0 || variant == 1, "variant must be 0 or 1");
        const auto r = dynamics::gravity_torques(
            dynamics::LinkParams{}, payload_n,
            variant == 0 ? dynamics::GravityVariant::WithJoint4 : dynamics::GravityVariant::Reduced);
        std::copy(r.torque.begin(), r.torque.end(), torques_out);
    });
}

fa_status fa_angle_to_steps(double angle_rad, int joint, int64_t* steps_out) {
    return guarded([&] {
        require(steps_out, "null argument");
        *steps_out = motor::angle_to_steps(angle_rad, joint);
    });
}

fa_status fa_apply_coupling(const int64_t delta_in[4], int64_t delta_out[4]) {
    return guarded([&] {
        require(delta_in && delta_out, "null argument");
        motor::StepVector in{};
        std::copy(delta_in, delta_in + 4, in.begin());
        const auto out = motor::apply_coupling(in);
        std::copy(out.begin(), out.end(), delta_out);
    });
}

fa_status fa_project(const double point_cam[3], double pixel_out[2]) {
    return guarded([&] {
        require(point_cam && pixel_out, "null argument");
        const auto px = vision::project(vision::CameraModel{}, Vec3(point_cam[0], point_cam[1], point_cam[2]));
        pixel_out[0] = px.u;
        pixel_out[1] = px.v;
    });
}

fa_status fa_estimate_distance(double box_w, double box_h, double* cm_out) {
    return guarded([&] {
        require(cm_out, "null argument");
        *cm_out = vision::estimate_distance(box_w, box_h);
    });
}

fa_status fa_search_sweep(int attempt, double* rad_out) {
    return guarded([&] {
        require(rad_out, "null argument");
        *rad_out = vision::search_sweep(attempt);
    });
}

fa_status fa_supervisor_step(int state, int signal, int* next_out) {
    return guarded([&] {
        require(next_out, "null argument");
        require(state >= 0 && state < supervisor::kNumStates, "state must be 0..10");
        require(signal >= 0 && signal < supervisor::kNumInputSignals, "signal must be 0..11");
        *next_out = static_cast<int>(
            supervisor::step(static_cast<supervisor::FeedingState>(state), static_cast<supervisor::Signal>(signal)));
    });
}

const char* fa_state_name(int state) {
    if (state < 0 || state >= supervisor::kNumStates) {
        return "";
    }
    return supervisor::state_name(static_cast<supervisor::FeedingState>(state)).data();
}

fa_status fa_sim_create(const char* scenario_path, fa_sim** out) {
    return guarded([&] {
        require(scenario_path && out, "null argument");
        auto handle = std::make_unique<fa_sim>();
        handle->sim = std::make_unique<sim::Simulator>(sim::load_scenario(scenario_path));
        *out = handle.release();
    });
}

fa_status fa_sim_create_from_json(const char* scenario_json, fa_sim** out) {
    return guarded([&] {
        require(scenario_json && out, "null argument");
        auto handle = std::make_unique<fa_sim>();
        handle->sim = std::make_unique<sim::Simulator>(sim::parse_scenario(scenario_json));
        *out = handle.release();
    });
}

void fa_sim_destroy(fa_sim* sim) {
    delete sim;
}

fa_status fa_sim_tick(fa_sim* sim, int count) {
    return guarded([&] {
        require(sim && count >= 0, "null handle or negative count");
        for (int i = 0; i < count; ++i) {
            sim->sim->tick();
        }
    });
}

fa_status fa_sim_signal(fa_sim* sim, const char* signal) {
    return guarded([&] {
        require(sim && signal, "null argument");
        const auto u = supervisor::parse_signal(signal);
        require(u && static_cast<int>(*u) <= static_cast<int>(supervisor::Signal::u11), "unknown signal");
        sim->sim->enqueue(*u);
    });
}

fa_status fa_sim_jog(fa_sim* sim, int joint, double delta_rad) {
    return guarded([&] {
        require(sim, "null handle");
        sim->sim->enqueue_jog({joint, delta_rad});
    });
}

fa_status fa_sim_state_json(const fa_sim* sim, char** json_out) {
    return guarded([&] {
        require(sim && json_out, "null argument");
        *json_out = dup_string(sim::snapshot_json(sim->sim->state(), true));
    });
}

fa_status fa_run_headless(const char* scenario_path, double duration_s, const char* out_dir,
                          char** summary_json_out) {
    return guarded([&] {
        require(scenario_path && out_dir, "null argument");
        const auto summary = sim::run_headless(sim::load_scenario(scenario_path), duration_s, out_dir);
        if (summary_json_out) {
            *summary_json_out = dup_string(sim::summary_json(summary));
        }
    });
}

fa_status fa_service_start(const char* scenario_path, const char* address, int port, double speed,
                           fa_service** out) {
    return guarded([&] {
        require(scenario_path && out, "null argument");
        require(port >= 0 && port <= 65535, "port must be 0..65535");
        sim::ServiceOptions opts;
        if (address) {
            opts.address = address;
        }
        opts.port = static_cast<unsigned short>(port);
        opts.speed = speed;
        auto handle = std::make_unique<fa_service>();
        handle->service = std::make_unique<sim::Service>(sim::load_scenario(scenario_path), opts);
        handle->service->start();
        *out = handle.release();
    });
}

int fa_service_port(const fa_service* svc) {
    return svc ? svc->service->port() : 0;
}

fa_status fa_service_wait(fa_service* svc) {
    return guarded([&] {
        require(svc, "null handle");
        svc->service->wait();
    });
}

fa_status fa_service_stop(fa_service* svc) {
    return guarded([&] {
        require(svc, "null handle");
        svc->service->stop();
    });
}

void fa_service_destroy(fa_service* svc) {
    delete svc;
}

}  // extern "C"
