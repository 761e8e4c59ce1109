#include "feedarm/sim/service.hpp"

#include "feedarm/sim/run_log.hpp"
#include "feedarm/sim/world.hpp"

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace feedarm::sim {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kLogCap = 2000;
constexpr std::size_t kWsBacklog = 64;

struct Command {
    enum class Kind { Signal, Jog } kind = Kind::Signal;
    supervisor::Signal u = supervisor::Signal::u1;
    Jog jog;
};

// Parses a /signal or /jog body. Throws Error{InvalidArgument}.
Command parse_command(const json& body, bool expect_jog) {
    if (!body.is_object()) {
        throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
    }
    Command c;
    if (!expect_jog) {
        if (!body.contains("u") || !body["u"].is_string()) {
            throw Error(ErrorCode::InvalidArgument, "expected {\"u\": \"u1\"..\"u11\"}");
        }
        const auto u = supervisor::parse_signal(body["u"].get<std::string>());
        if (!u || static_cast<int>(*u) > static_cast<int>(supervisor::Signal::u11)) {
            throw Error(ErrorCode::InvalidArgument, "unknown signal " + body["u"].get<std::string>());
        }
        c.u = *u;
        return c;
    }
    if (!body.contains("joint") || !body["joint"].is_number_integer() || !body.contains("delta_rad") ||
        !body["delta_rad"].is_number()) {
        throw Error(ErrorCode::InvalidArgument, "expected {\"joint\": 1..4, \"delta_rad\": number}");
    }
    c.kind = Command::Kind::Jog;
    c.jog.joint = body["joint"].get<int>();
    c.jog.delta_rad = body["delta_rad"].get<double>();
    if (c.jog.joint < 1 || c.jog.joint > kNumJoints || !std::isfinite(c.jog.delta_rad)) {
        throw Error(ErrorCode::InvalidArgument, "jog joint must be 1..4 and delta_rad finite");
    }
    return c;
}

}  // namespace

struct Service::Impl {
    Scenario scenario;
    ServiceOptions options;

    mutable std::mutex mu;
    std::condition_variable cv;
    std::vector<Command> inbox;
    std::uint64_t submitted = 0;
    std::uint64_t applied = 0;
    std::shared_ptr<const std::string> latest;
    std::uint64_t snapshot_seq = 0;
    std::deque<std::pair<std::uint64_t, std::string>> trace_log;
    std::uint64_t trace_seq = 0;
    std::deque<std::string> event_log;
    bool running = false;
    bool stopped = false;

    net::io_context ioc;
    tcp::acceptor acceptor{ioc};
    std::thread sim_thread;
    std::vector<std::thread> io_threads;

    Impl(Scenario s, ServiceOptions o) : scenario(std::move(s)), options(o) {}

    void sim_loop();
    void accept();

    std::uint64_t submit(const Command& c) {
        std::lock_guard lock(mu);
        inbox.push_back(c);
        return ++submitted;
    }

    // Waits until the tick that consumed command `seq` is published.
    bool wait_applied(std::uint64_t seq) {
        std::unique_lock lock(mu);
        return cv.wait_for(lock, std::chrono::seconds(5), [&] { return applied >= seq || !running; }) &&
               applied >= seq;
    }

    std::shared_ptr<const std::string> snapshot() const {
        std::lock_guard lock(mu);
        return latest;
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req);
    std::string handle_ws_message(const std::string& text);
    std::string scenario_json() const;
    std::string log_tail(std::size_t n) const;
};

void Service::Impl::sim_loop() {
    Simulator sim(scenario);
    const auto start = std::chrono::steady_clock::now();
    const double wall_per_tick = scenario.dt / options.speed;
    for (;;) {
        std::vector<Command> batch;
        std::uint64_t batch_seq = 0;
        {
            std::unique_lock lock(mu);
            const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                         std::chrono::duration<double>(wall_per_tick * (sim.state().tick + 1)));
            cv.wait_until(lock, due, [&] { return !running; });
            if (!running) {
                return;
            }
            batch.swap(inbox);
            batch_seq = submitted;
        }
        for (const Command& c : batch) {
            if (c.kind == Command::Kind::Signal) {
                sim.enqueue(c.u);
            } else {
                sim.enqueue_jog(c.jog);
            }
        }
        const auto rows = sim.tick();
        auto snap = std::make_shared<const std::string>(snapshot_json(sim.state(), true));
        {
            std::lock_guard lock(mu);
            latest = std::move(snap);
            ++snapshot_seq;
            for (const auto& row : rows) {
                trace_log.emplace_back(++trace_seq, supervisor::trace_row_json(row));
            }
            for (const Event& e : sim.state().events) {
                event_log.push_back(json{{"t", e.t}, {"kind", e.kind}, {"message", e.message}}.dump());
            }
            while (trace_log.size() > kLogCap) trace_log.pop_front();
            while (event_log.size() > kLogCap) event_log.pop_front();
            applied = batch_seq;
        }
        cv.notify_all();
    }
}

std::string Service::Impl::scenario_json() const {
    json states = json::array();
    for (int i = 0; i < supervisor::kNumStates; ++i) {
        const auto s = static_cast<supervisor::FeedingState>(i);
        states.push_back({{"id", supervisor::state_name(s)}, {"label", supervisor::state_label(s)}});
    }
    json signals = json::array();
    for (int i = 0; i <= static_cast<int>(supervisor::Signal::u11); ++i) {
        signals.push_back(supervisor::signal_name(static_cast<supervisor::Signal>(i)));
    }
    json j;
    j["scenario"] = json::parse(save_scenario(scenario));
    j["ui"] = {{"radius_threshold", scenario.servo.radius_threshold},
               {"image_width", scenario.camera.width},
               {"image_height", scenario.camera.height},
               {"push_hz", options.push_hz},
               {"states", states},
               {"signals", signals}};
    return j.dump();
}

std::string Service::Impl::log_tail(std::size_t n) const {
    json trace = json::array();
    json events = json::array();
    std::lock_guard lock(mu);
    for (std::size_t i = trace_log.size() > n ? trace_log.size() - n : 0; i < trace_log.size(); ++i) {
        trace.push_back(json::parse(trace_log[i].second));
    }
    for (std::size_t i = event_log.size() > n ? event_log.size() - n : 0; i < event_log.size(); ++i) {
        events.push_back(json::parse(event_log[i]));
    }
    return json{{"trace", trace}, {"events", events}}.dump();
}

http::response<http::string_body> Service::Impl::handle(const http::request<http::string_body>& req) {
    auto reply = [&](http::status status, std::string body) {
        http::response<http::string_body> res{status, req.version()};
        res.set(http::field::content_type, "application/json");
        res.set(http::field::access_control_allow_origin, "*");
        res.keep_alive(req.keep_alive());
        res.body() = std::move(body);
        res.prepare_payload();
        return res;
    };
    auto error = [&](http::status status, const std::string& what) {
        return reply(status, json{{"error", what}}.dump());
    };

    const std::string target(req.target());
    const auto qpos = target.find('?');
    const std::string path = target.substr(0, qpos);
    const std::string query = qpos == std::string::npos ? "" : target.substr(qpos + 1);

    if (req.method() == http::verb::options) {
        auto res = reply(http::status::no_content, "");
        res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
        res.set(http::field::access_control_allow_headers, "Content-Type");
        return res;
    }
    if (path == "/state" || path == "/scenario" || path == "/log/tail") {
        if (req.method() != http::verb::get) {
            return error(http::status::method_not_allowed, "use GET");
        }
        if (path == "/state") {
            const auto snap = snapshot();
            return snap ? reply(http::status::ok, *snap) : error(http::status::service_unavailable, "no snapshot yet");
        }
        if (path == "/scenario") {
            return reply(http::status::ok, scenario_json());
        }
        std::size_t n = 20;
        for (std::size_t pos = 0; pos < query.size();) {
            const auto amp = query.find('&', pos);
            const std::string kv = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
            if (kv.rfind("n=", 0) == 0) {
                try {
                    const long v = std::stol(kv.substr(2));
                    if (v < 0) throw std::invalid_argument("negative");
                    n = static_cast<std::size_t>(v);
                } catch (const std::exception&) {
                    return error(http::status::bad_request, "n must be a non-negative integer");
                }
            }
            if (amp == std::string::npos) break;
            pos = amp + 1;
        }
        return reply(http::status::ok, log_tail(std::min<std::size_t>(n, kLogCap)));
    }
    if (path == "/signal" || path == "/jog") {
        if (req.method() != http::verb::post) {
            return error(http::status::method_not_allowed, "use POST");
        }
        Command cmd;
        try {
            cmd = parse_command(json::parse(req.body()), path == "/jog");
        } catch (const json::exception& e) {
            return error(http::status::bad_request, std::string("malformed JSON: ") + e.what());
        } catch (const Error& e) {
            return error(http::status::bad_request, e.what());
        }
        const std::uint64_t seq = submit(cmd);
        if (!wait_applied(seq)) {
            return error(http::status::service_unavailable, "simulation not running");
        }
        const auto snap = snapshot();
        const json state = json::parse(*snap);
        return reply(http::status::ok, json{{"accepted", true}, {"tick", state["tick"]}, {"state", state["state"]}}.dump());
    }
    return error(http::status::not_found, "no route for " + path);
}

std::string Service::Impl::handle_ws_message(const std::string& text) {
    try {
        const json body = json::parse(text);
        const bool jog = body.is_object() && body.contains("joint");
        submit(parse_command(body, jog));
        return json{{"type", "ack"}, {"command", jog ? "jog" : "signal"}}.dump();
    } catch (const json::exception& e) {
        return json{{"type", "error"}, {"error", std::string("malformed JSON: ") + e.what()}}.dump();
    } catch (const Error& e) {
        return json{{"type", "error"}, {"error", e.what()}}.dump();
    }
}

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, Service::Impl& svc)
        : ws_(std::move(socket)), timer_(ws_.get_executor()), svc_(svc) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) {
            return;
        }
        {
            std::lock_guard lock(svc_.mu);
            last_trace_ = svc_.trace_seq;
        }
        push();
        do_read();
        schedule();
    }

    void do_read() {
        ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        send(svc_.handle_ws_message(text));
        do_read();
    }

    void schedule() {
        const double hz = svc_.options.push_hz > 0.0 ? svc_.options.push_hz : 20.0;
        timer_.expires_after(std::chrono::microseconds(static_cast<long>(1e6 / hz)));
        timer_.async_wait(beast::bind_front_handler(&WsSession::on_timer, shared_from_this()));
    }

    void on_timer(beast::error_code ec) {
        if (ec || closed_) {
            return;
        }
        push();
        schedule();
    }

    // Queues trace rows since the last push, then the newest snapshot if it changed.
    void push() {
        std::vector<std::string> rows;
        std::shared_ptr<const std::string> snap;
        std::uint64_t seq = 0;
        {
            std::lock_guard lock(svc_.mu);
            for (const auto& [n, row] : svc_.trace_log) {
                if (n > last_trace_) {
                    rows.push_back(row);
                    last_trace_ = n;
                }
            }
            snap = svc_.latest;
            seq = svc_.snapshot_seq;
        }
        for (const std::string& row : rows) {
            send("{\"type\":\"trace\",\"data\":" + row + "}");
        }
        if (snap && seq != last_snapshot_ && queue_.size() < kWsBacklog) {
            last_snapshot_ = seq;
            send("{\"type\":\"state\",\"data\":" + *snap + "}");
        }
    }

    void send(std::string msg) {
        queue_.push_back(std::move(msg));
        if (queue_.size() == 1) {
            do_write();
        }
    }

    void do_write() {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()),
                        beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            close();
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) {
            do_write();
        }
    }

    void close() {
        closed_ = true;
        timer_.cancel();
    }

    websocket::stream<beast::tcp_stream> ws_;
    net::steady_timer timer_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    std::uint64_t last_trace_ = 0;
    std::uint64_t last_snapshot_ = 0;
    bool closed_ = false;
    Service::Impl& svc_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, Service::Impl& svc) : stream_(std::move(socket)), svc_(svc) {}

    void run() {
        net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
    }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            shutdown();
            return;
        }
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/ws") {
                stream_.expires_never();
                std::make_shared<WsSession>(stream_.release_socket(), svc_)->run(std::move(req_));
            }
            return;
        }
        res_ = std::make_shared<http::response<http::string_body>>(svc_.handle(req_));
        http::async_write(stream_, *res_,
                          beast::bind_front_handler(&HttpSession::on_write, shared_from_this(), res_->keep_alive()));
    }

    void on_write(bool keep_alive, beast::error_code ec, std::size_t) {
        if (ec) {
            return;
        }
        if (!keep_alive) {
            shutdown();
            return;
        }
        do_read();
    }

    void shutdown() {
        beast::error_code ec;
        stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    std::shared_ptr<http::response<http::string_body>> res_;
    Service::Impl& svc_;
};

}  // namespace

void Service::Impl::accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec == net::error::operation_aborted) {
                return;
            }
        } else {
            std::make_shared<HttpSession>(std::move(socket), *this)->run();
        }
        accept();
    });
}

Service::Service(Scenario scenario, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(scenario), options)) {
    impl_->scenario.validate();
    if (!(options.speed > 0.0) || !std::isfinite(options.speed)) {
        throw Error(ErrorCode::InvalidArgument, "speed must be positive");
    }
}

Service::~Service() {
    stop();
}

void Service::start() {
    Impl& s = *impl_;
    beast::error_code ec;
    const auto address = net::ip::make_address(s.options.address, ec);
    if (ec) {
        throw Error(ErrorCode::BindError, "bad address " + s.options.address);
    }
    const tcp::endpoint endpoint{address, s.options.port};
    s.acceptor.open(endpoint.protocol(), ec);
    if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) s.acceptor.bind(endpoint, ec);
    if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
        throw Error(ErrorCode::BindError,
                    "cannot listen on " + s.options.address + ":" + std::to_string(s.options.port) + ": " + ec.message());
    }
    {
        std::lock_guard lock(s.mu);
        s.running = true;
        // Publish the initial world before anyone can ask for it.
        Simulator probe(s.scenario);
        s.latest = std::make_shared<const std::string>(snapshot_json(probe.state(), true));
    }
    s.sim_thread = std::thread([&s] { s.sim_loop(); });
    s.accept();
    for (int i = 0; i < 2; ++i) {
        s.io_threads.emplace_back([&s] { s.ioc.run(); });
    }
}

void Service::stop() {
    Impl& s = *impl_;
    {
        std::lock_guard lock(s.mu);
        if (!s.running && s.stopped) {
            return;
        }
        s.running = false;
        s.stopped = true;
    }
    s.cv.notify_all();
    if (s.sim_thread.joinable()) {
        s.sim_thread.join();
    }
    s.ioc.stop();
    for (auto& t : s.io_threads) {
        if (t.joinable()) {
            t.join();
        }
    }
    s.io_threads.clear();
    beast::error_code ec;
    s.acceptor.close(ec);
}

void Service::wait() {
    Impl& s = *impl_;
    std::unique_lock lock(s.mu);
    s.cv.wait(lock, [&] { return s.stopped; });
}

unsigned short Service::port() const {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? 0 : ep.port();
}

std::string Service::state_json() const {
    const auto snap = impl_->snapshot();
    return snap ? *snap : std::string();
}

}  // namespace feedarm::sim
