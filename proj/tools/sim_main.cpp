#include "feedarm/feedarm.h"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <string>

#include <pthread.h>

namespace {

int report(fa_status status) {
    if (status != FA_OK) {
        std::fprintf(stderr, "error: %s: %s\n", fa_status_name(status), fa_last_error());
        return 1;
    }
    return 0;
}

int cmd_run(const std::string& scenario, double duration, const std::string& out) {
    char* summary = nullptr;
    const fa_status st = fa_run_headless(scenario.c_str(), duration, out.c_str(), &summary);
    if (st == FA_OK) {
        std::fputs(summary, stdout);
        fa_string_free(summary);
    }
    return report(st);
}

int cmd_serve(const std::string& scenario, const std::string& address, int port, double speed) {
    // Block termination signals in every thread; this one collects them below.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    fa_service* svc = nullptr;
    const fa_status st = fa_service_start(scenario.c_str(), address.c_str(), port, speed, &svc);
    if (st != FA_OK) {
        return report(st);
    }
    std::printf("listening on http://%s:%d (speed x%g)\n", address.c_str(), fa_service_port(svc), speed);
    std::fflush(stdout);
    int sig = 0;
    sigwait(&set, &sig);
    std::printf("stopping\n");
    fa_service_stop(svc);
    fa_service_destroy(svc);
    return 0;
}

int cmd_payload() {
    fa_payload_report r;
    if (const fa_status st = fa_payload_report_default(&r); st != FA_OK) {
        return report(st);
    }
    std::printf("gravity torques at W_L = %.3f N\n", r.reference_payload);
    std::printf("  T2g = %.5f N*m\n  T3g = %.5f N*m\n", r.gravity_t2, r.gravity_t3);
    std::printf("static payload limit         %.4f N (joint %d binds)\n", r.max_static, r.max_static_binding_joint);
    std::printf("static limit, no end effector %.4f N\n", r.max_static_reduced);
    std::printf("inertia  I2 = %.9f kg*m^2  I3 = %.9f kg*m^2\n", r.inertia_i2, r.inertia_i3);
    std::printf("inertial torque  tau2 = %.6f N*m  tau3 = %.6f N*m\n", r.tau2, r.tau3);
    std::printf("dynamic payload limit        %.4f N (joint %d binds)\n", r.max_dynamic,
                r.max_dynamic_binding_joint);
    std::printf("joint-3-only dynamic bound   %.4f N\n", r.max_dynamic_joint3);
    return 0;
}

int cmd_workspace(int n, std::uint64_t seed, const std::string& out) {
    const fa_status st = fa_workspace_csv(n, seed, out.c_str());
    if (st == FA_OK) {
        std::printf("wrote %d points to %s\n", n, out.c_str());
    }
    return report(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feeding-arm simulator"};
    app.require_subcommand(1);

    std::string scenario;
    double duration = 120.0;
    std::string out_dir = "run";
    auto* run = app.add_subcommand("run", "Run a scenario headless and write JSONL logs");
    run->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--duration", duration, "Simulated seconds")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory");

    std::string address = "127.0.0.1";
    int port = 8080;
    double speed = 1.0;
    auto* serve = app.add_subcommand("serve", "Serve the live simulation over HTTP and WebSocket");
    serve->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    serve->add_option("--port", port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
    serve->add_option("--address", address, "Bind address");
    serve->add_option("--speed", speed, "Simulated seconds per wall second")->check(CLI::PositiveNumber);

    app.add_subcommand("payload", "Print the gravity, inertia and payload report");

    int n = 2000;
    std::uint64_t seed = 1;
    std::string csv = "workspace.csv";
    auto* ws = app.add_subcommand("workspace", "Sample the reachable workspace to CSV");
    ws->add_option("--n", n, "Number of samples")->check(CLI::PositiveNumber);
    ws->add_option("--seed", seed, "RNG seed");
    ws->add_option("--out", csv, "Output CSV path");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        return cmd_run(scenario, duration, out_dir);
    }
    if (serve->parsed()) {
        return cmd_serve(scenario, address, port, speed);
    }
    if (ws->parsed()) {
        return cmd_workspace(n, seed, csv);
    }
    return cmd_payload();
}
