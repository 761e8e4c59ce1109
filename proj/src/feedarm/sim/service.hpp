#pragma once

#include "feedarm/sim/scenario.hpp"

#include <memory>
#include <string>

namespace feedarm::sim {

struct ServiceOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    double speed = 1.0;          // simulated seconds per wall-clock second
    double push_hz = 20.0;       // WebSocket snapshot rate cap
};

/// Real-time simulation behind HTTP + WebSocket.
///
///   GET  /state         latest WorldState (with event_tail)
///   GET  /scenario      {"scenario": ..., "ui": {...}}
///   POST /signal        {"u": "u1".."u11"}
///   POST /jog           {"joint": 1..4, "delta_rad": f}
///   GET  /log/tail?n=   last n trace rows and events
///   WS   /ws            pushes {"type":"state"|"trace","data":...}; accepts the POST bodies
///
/// One thread owns the Simulator; handlers only enqueue commands and read
/// published snapshots. POST handlers reply once the tick that consumed the
/// command has been published.
class Service {
public:
    Service(Scenario scenario, ServiceOptions options);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds and starts the simulation and network threads. Throws Error{BindError}.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread.
    void wait();

    unsigned short port() const;
    std::string state_json() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace feedarm::sim
