/* C interface to the feeding-arm control stack.
 *
 * Every function returns an fa_status; outputs go through pointer arguments.
 * On failure fa_last_error() describes the most recent error on the calling
 * thread. Strings handed out by the library are released with fa_string_free.
 * Handles are opaque and must be destroyed by their matching *_destroy call.
 */
#ifndef FEEDARM_FEEDARM_H
#define FEEDARM_FEEDARM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(FEEDARM_BUILDING_LIBRARY)
#    define FA_API __declspec(dllexport)
#  else
#    define FA_API __declspec(dllimport)
#  endif
#else
#  define FA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fa_status {
    FA_OK = 0,
    FA_INVALID_ARGUMENT = 1,
    FA_UNREACHABLE = 2,
    FA_SINGULAR_BASE = 3,
    FA_BAD_TIMING = 4,
    FA_ZERO_INTERVAL = 5,
    FA_BEHIND_CAMERA = 6,
    FA_EMPTY_BOX = 7,
    FA_NOT_FOUND = 8,
    FA_PARSE_ERROR = 9,
    FA_VALIDATION_ERROR = 10,
    FA_IO_ERROR = 11,
    FA_BIND_ERROR = 12,
    FA_INTERNAL_ERROR = 100
} fa_status;

typedef struct fa_sim fa_sim;
typedef struct fa_service fa_service;

FA_API const char* fa_version(void);
FA_API const char* fa_status_name(fa_status status);
/* Message for the last failed call on this thread; "" if none. */
FA_API const char* fa_last_error(void);
FA_API void fa_string_free(char* s);

/* ---- kinematics (mm, rad, DH joint angles) ---- */

/* pose_out: 4x4 row-major homogeneous transform. */
FA_API fa_status fa_forward_kinematics(const double q[4], double pose_out[16], int* within_limits);
FA_API fa_status fa_inverse_kinematics(const double target_mm[3], double theta_234, double q_out[4]);
/* jac_out: 3x4 row-major d(position)/dq. */
FA_API fa_status fa_jacobian(const double q[4], double jac_out[12]);
FA_API fa_status fa_mobility_degree(int n_links, int pairs_class5, int* out);
/* Writes an x_mm,y_mm,z_mm CSV of `count` sampled end-effector positions. */
FA_API fa_status fa_workspace_csv(int count, uint64_t seed, const char* path);

/* ---- statics and dynamics (N, N*m) ---- */

typedef struct fa_payload_report {
    double gravity_t2;           /* T2g at the reference payload */
    double gravity_t3;           /* T3g at the reference payload */
    double reference_payload;
    double max_static;           /* full sums, joint 4 included */
    int max_static_binding_joint;
    double max_static_reduced;   /* end effector removed */
    double max_dynamic;
    int max_dynamic_binding_joint;
    double max_dynamic_joint3;   /* joint-3-only bound */
    double inertia_i2;
    double inertia_i3;
    double tau2;
    double tau3;
} fa_payload_report;

FA_API fa_status fa_payload_report_default(fa_payload_report* out);
/* variant 0: with joint 4, 1: reduced. torques_out: T1g..T4g. */
FA_API fa_status fa_gravity_torques(double payload_n, int variant, double torques_out[4]);

/* ---- motors ---- */

FA_API fa_status fa_angle_to_steps(double angle_rad, int joint, int64_t* steps_out);
FA_API fa_status fa_apply_coupling(const int64_t delta_in[4], int64_t delta_out[4]);

/* ---- vision ---- */

/* Default camera; point in the optical frame, metres. */
FA_API fa_status fa_project(const double point_cam[3], double pixel_out[2]);
FA_API fa_status fa_estimate_distance(double box_w, double box_h, double* cm_out);
FA_API fa_status fa_search_sweep(int attempt, double* rad_out);

/* ---- supervisor ---- */

/* States 0..10 are X0..X10; signals 0..10 are u1..u11, 11 is p_found. */
FA_API fa_status fa_supervisor_step(int state, int signal, int* next_out);
FA_API const char* fa_state_name(int state);

/* ---- simulation ---- */

FA_API fa_status fa_sim_create(const char* scenario_path, fa_sim** out);
FA_API fa_status fa_sim_create_from_json(const char* scenario_json, fa_sim** out);
FA_API void fa_sim_destroy(fa_sim* sim);
FA_API fa_status fa_sim_tick(fa_sim* sim, int count);
/* Name "u1".."u11". */
FA_API fa_status fa_sim_signal(fa_sim* sim, const char* signal);
/* joint is 1-based. */
FA_API fa_status fa_sim_jog(fa_sim* sim, int joint, double delta_rad);
FA_API fa_status fa_sim_state_json(const fa_sim* sim, char** json_out);

/* Writes run.jsonl, trace.jsonl and summary.json under out_dir. */
FA_API fa_status fa_run_headless(const char* scenario_path, double duration_s, const char* out_dir,
                                 char** summary_json_out);

/* ---- live service ---- */

FA_API fa_status fa_service_start(const char* scenario_path, const char* address, int port, double speed,
                                  fa_service** out);
FA_API int fa_service_port(const fa_service* svc);
/* Blocks until fa_service_stop is called from another thread. */
FA_API fa_status fa_service_wait(fa_service* svc);
FA_API fa_status fa_service_stop(fa_service* svc);
FA_API void fa_service_destroy(fa_service* svc);

#ifdef __cplusplus
}
#endif

#endif /* FEEDARM_FEEDARM_H */
