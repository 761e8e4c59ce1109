#include <doctest.h>

#include "feedarm/sim/service.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <thread>

using namespace feedarm;
using namespace feedarm::sim;
using json = nlohmann::json;

namespace {

Scenario idle() {
    return parse_scenario(R"({"name": "idle", "nose_world": [0.8, 0.0, 0.3]})");
}

struct Running {
    Service svc;
    explicit Running(Scenario s, double speed = 1.0) : svc(std::move(s), options(speed)) { svc.start(); }
    ~Running() { svc.stop(); }

    static ServiceOptions options(double speed) {
        ServiceOptions o;
        o.port = 0;
        o.speed = speed;
        return o;
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", svc.port());
        c.set_read_timeout(10, 0);
        return c;
    }
};

json get_json(httplib::Client& c, const std::string& path) {
    auto res = c.Get(path);
    REQUIRE(res);
    REQUIRE(res->status == 200);
    return json::parse(res->body);
}

json post_json(httplib::Client& c, const std::string& path, const json& body, int expect = 200) {
    auto res = c.Post(path, body.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == expect);
    return json::parse(res->body);
}

}  // namespace

TEST_CASE("state endpoint serves the latest snapshot") {
    Running r(idle());
    auto c = r.client();
    const json a = get_json(c, "/state");
    CHECK(a["state"] == "X0");
    CHECK(a["q"].size() == 4);
    CHECK(a.contains("event_tail"));
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    const json b = get_json(c, "/state");
    CHECK(b["tick"].get<long>() > a["tick"].get<long>());
    CHECK(json::parse(r.svc.state_json())["state"] == "X0");
}

TEST_CASE("emergency stop through the API") {
    Running r(idle());
    auto c = r.client();
    const json ack = post_json(c, "/signal", {{"u", "u8"}});
    CHECK(ack["accepted"] == true);
    CHECK(ack["state"] == "X8");
    CHECK(get_json(c, "/state")["state"] == "X8");
    post_json(c, "/signal", {{"u", "u1"}});
    CHECK(get_json(c, "/state")["state"] == "X0");
}

TEST_CASE("jog through the API") {
    Running r(idle());
    auto c = r.client();
    const auto before = get_json(c, "/state")["target_steps"][0].get<long>();
    post_json(c, "/jog", {{"joint", 1}, {"delta_rad", 0.1}});
    const auto after = get_json(c, "/state")["target_steps"][0].get<long>();
    CHECK(after - before == 76);
}

TEST_CASE("bad requests") {
    Running r(idle());
    auto c = r.client();
    CHECK(post_json(c, "/signal", {{"u", "u12"}}, 400).contains("error"));
    CHECK(post_json(c, "/signal", {{"u", "p_found"}}, 400).contains("error"));
    CHECK(post_json(c, "/jog", {{"joint", 0}, {"delta_rad", 0.1}}, 400).contains("error"));
    CHECK(post_json(c, "/jog", {{"joint", 1}}, 400).contains("error"));
    auto res = c.Post("/signal", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    res = c.Get("/nowhere");
    REQUIRE(res);
    CHECK(res->status == 404);
    res = c.Get("/signal");
    REQUIRE(res);
    CHECK(res->status == 405);
    res = c.Get("/log/tail?n=abc");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
}

TEST_CASE("scenario and log tail") {
    Running r(idle());
    auto c = r.client();
    const json s = get_json(c, "/scenario");
    CHECK(s["scenario"]["name"] == "idle");
    CHECK(s["ui"]["radius_threshold"] == 20.0);
    CHECK(s["ui"]["image_width"] == 640);
    CHECK(s["ui"]["states"].size() == 11);

    post_json(c, "/signal", {{"u", "u1"}});
    post_json(c, "/signal", {{"u", "u10"}});
    const json tail = get_json(c, "/log/tail?n=1");
    REQUIRE(tail["trace"].size() == 1);
    CHECK(tail["trace"][0]["signal"] == "u10");
    CHECK(tail["trace"][0]["next"] == "X0");
    const json all = get_json(c, "/log/tail?n=50");
    CHECK(all["trace"].size() == 2);
    CHECK(all["events"].is_array());
}

TEST_CASE("websocket pushes state and accepts commands") {
    namespace beast = boost::beast;
    namespace websocket = beast::websocket;
    using tcp = boost::asio::ip::tcp;

    Running r(idle());
    boost::asio::io_context ioc;
    tcp::resolver resolver(ioc);
    websocket::stream<tcp::socket> ws(ioc);
    boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(r.svc.port())));
    ws.handshake("127.0.0.1", "/ws");

    auto read = [&] {
        beast::flat_buffer buf;
        ws.read(buf);
        return json::parse(beast::buffers_to_string(buf.data()));
    };

    const json first = read();
    CHECK(first["type"] == "state");
    CHECK(first["data"]["state"] == "X0");

    ws.write(boost::asio::buffer(std::string(R"({"u": "u8"})")));
    bool acked = false;
    bool traced = false;
    bool stopped = false;
    for (int i = 0; i < 200 && !(acked && traced && stopped); ++i) {
        const json m = read();
        if (m["type"] == "ack") {
            acked = true;
        } else if (m["type"] == "trace") {
            traced = m["data"]["next"] == "X8";
        } else if (m["type"] == "state") {
            stopped = stopped || m["data"]["state"] == "X8";
        }
    }
    CHECK(acked);
    CHECK(traced);
    CHECK(stopped);

    ws.write(boost::asio::buffer(std::string(R"({"u": 3})")));
    bool error = false;
    for (int i = 0; i < 50 && !error; ++i) {
        error = read()["type"] == "error";
    }
    CHECK(error);
    ws.close(websocket::close_code::normal);
}

TEST_CASE("state pushes are rate limited") {
    namespace beast = boost::beast;
    namespace websocket = beast::websocket;
    using tcp = boost::asio::ip::tcp;

    Running r(idle(), 5.0);
    boost::asio::io_context ioc;
    tcp::resolver resolver(ioc);
    websocket::stream<tcp::socket> ws(ioc);
    boost::asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(r.svc.port())));
    ws.handshake("127.0.0.1", "/ws");
    const auto t0 = std::chrono::steady_clock::now();
    int states = 0;
    while (std::chrono::steady_clock::now() - t0 < std::chrono::seconds(1)) {
        beast::flat_buffer buf;
        ws.read(buf);
        states += json::parse(beast::buffers_to_string(buf.data()))["type"] == "state";
    }
    CHECK(states >= 5);
    CHECK(states <= 22);
    ws.close(websocket::close_code::normal);
}

TEST_CASE("taken port is a bind error") {
    Running r(idle());
    ServiceOptions o;
    o.port = r.svc.port();
    Service second(idle(), o);
    try {
        second.start();
        FAIL("expected BindError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BindError);
    }
}
