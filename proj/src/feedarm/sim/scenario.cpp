#include "feedarm/sim/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace feedarm::sim {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
    throw Error(ErrorCode::ValidationError, field + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        invalid(where.empty() ? "scenario" : where, "must be an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.count(key)) {
            invalid(where.empty() ? key : where + "." + key, "unknown field");
        }
    }
}

std::string path_of(const std::string& where, const char* key) {
    return where.empty() ? std::string(key) : where + "." + key;
}

double read_number(const json& obj, const std::string& where, const char* key, double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        invalid(path_of(where, key), "must be a number");
    }
    return v.get<double>();
}

template <std::size_t N>
std::array<double, N> read_array(const json& obj, const std::string& where, const char* key,
                                 const std::array<double, N>& fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != N) {
        invalid(path_of(where, key), "must be an array of " + std::to_string(N) + " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!v[i].is_number()) {
            invalid(path_of(where, key), "must be an array of " + std::to_string(N) + " numbers");
        }
        out[i] = v[i].get<double>();
    }
    return out;
}

Vec3 read_vec3(const json& obj, const std::string& where, const char* key, const Vec3& fallback) {
    const auto a = read_array<3>(obj, where, key, {fallback.x(), fallback.y(), fallback.z()});
    return {a[0], a[1], a[2]};
}

JointVector read_joints(const json& obj, const std::string& where, const char* key, const JointVector& fallback) {
    return JointVector{read_array<4>(obj, where, key, fallback.q)};
}

json vec3_json(const Vec3& v) {
    return json::array({v.x(), v.y(), v.z()});
}

template <typename T, std::size_t N>
json array_json(const std::array<T, N>& a) {
    json out = json::array();
    for (const T& x : a) {
        out.push_back(x);
    }
    return out;
}

void parse_camera(const json& j, vision::CameraModel& c) {
    const std::string w = "camera";
    check_keys(j, w, {"fx", "fy", "cx", "cy", "dist", "width", "height"});
    c.fx = read_number(j, w, "fx", c.fx);
    c.fy = read_number(j, w, "fy", c.fy);
    c.cx = read_number(j, w, "cx", c.cx);
    c.cy = read_number(j, w, "cy", c.cy);
    c.dist = read_array<5>(j, w, "dist", c.dist);
    c.width = static_cast<int>(read_number(j, w, "width", c.width));
    c.height = static_cast<int>(read_number(j, w, "height", c.height));
}

void parse_servo(const json& j, vision::ServoConfig& s) {
    const std::string w = "servo";
    check_keys(j, w,
               {"x_sensitivity", "y_sensitivity", "radius_threshold", "stable_duration", "rotation_factor_init",
                "rotation_increment", "initial_direction", "max_search_attempts", "max_plan_attempts",
                "plan_tolerance_mm"});
    s.x_sensitivity = read_number(j, w, "x_sensitivity", s.x_sensitivity);
    s.y_sensitivity = read_number(j, w, "y_sensitivity", s.y_sensitivity);
    s.radius_threshold = read_number(j, w, "radius_threshold", s.radius_threshold);
    s.stable_duration = read_number(j, w, "stable_duration", s.stable_duration);
    s.rotation_factor_init = read_number(j, w, "rotation_factor_init", s.rotation_factor_init);
    s.rotation_increment = read_number(j, w, "rotation_increment", s.rotation_increment);
    s.initial_direction = static_cast<int>(read_number(j, w, "initial_direction", s.initial_direction));
    s.max_search_attempts = static_cast<int>(read_number(j, w, "max_search_attempts", s.max_search_attempts));
    s.max_plan_attempts = static_cast<int>(read_number(j, w, "max_plan_attempts", s.max_plan_attempts));
    s.plan_tolerance_mm = read_number(j, w, "plan_tolerance_mm", s.plan_tolerance_mm);
}

void parse_stepper(const json& j, motor::StepperPlan& p) {
    const std::string w = "stepper";
    check_keys(j, w, {"steps_per_rev", "coupling_2_to_3", "max_rate", "accel"});
    std::array<double, 4> spr{};
    for (int i = 0; i < 4; ++i) {
        spr[i] = p.steps_per_rev[i];
    }
    spr = read_array<4>(j, w, "steps_per_rev", spr);
    for (int i = 0; i < 4; ++i) {
        if (spr[i] != std::floor(spr[i])) {
            invalid("stepper.steps_per_rev", "must be integers");
        }
        p.steps_per_rev[i] = static_cast<int>(spr[i]);
    }
    p.coupling_2_to_3 = read_number(j, w, "coupling_2_to_3", p.coupling_2_to_3);
    p.max_rate = read_array<4>(j, w, "max_rate", p.max_rate);
    p.accel = read_array<4>(j, w, "accel", p.accel);
}

void parse_cascade(const json& j, motor::CascadeGains& g) {
    const std::string w = "cascade";
    check_keys(j, w, {"Kp1", "Ki1", "Kd1", "Kp2", "Ki2", "integrator_limit"});
    g.Kp1 = read_number(j, w, "Kp1", g.Kp1);
    g.Ki1 = read_number(j, w, "Ki1", g.Ki1);
    g.Kd1 = read_number(j, w, "Kd1", g.Kd1);
    g.Kp2 = read_number(j, w, "Kp2", g.Kp2);
    g.Ki2 = read_number(j, w, "Ki2", g.Ki2);
    g.integrator_limit = read_number(j, w, "integrator_limit", g.integrator_limit);
}

void parse_links(const json& j, dynamics::LinkParams& p) {
    const std::string w = "links";
    check_keys(j, w, {"L", "W", "WJ3", "WJ4", "m2", "m3", "drive_torque", "eta_belt", "alpha_max"});
    const auto L = read_array<5>(j, w, "L", {p.L0, p.L1, p.L2, p.L3, p.L4});
    p.L0 = L[0];
    p.L1 = L[1];
    p.L2 = L[2];
    p.L3 = L[3];
    p.L4 = L[4];
    const auto W = read_array<3>(j, w, "W", {p.W2, p.W3, p.W4});
    p.W2 = W[0];
    p.W3 = W[1];
    p.W4 = W[2];
    p.WJ3 = read_number(j, w, "WJ3", p.WJ3);
    p.WJ4 = read_number(j, w, "WJ4", p.WJ4);
    p.m2 = read_number(j, w, "m2", p.m2);
    p.m3 = read_number(j, w, "m3", p.m3);
    p.drive_torque = read_array<4>(j, w, "drive_torque", p.drive_torque);
    p.eta_belt = read_number(j, w, "eta_belt", p.eta_belt);
    p.alpha_max = read_number(j, w, "alpha_max", p.alpha_max);
}

bool finite(const Vec3& v) {
    return v.allFinite();
}

}  // namespace

void Scenario::validate() const {
    if (!(dt > 1e-5 && dt <= 0.1)) {
        invalid("dt", "must lie in (1e-5, 0.1]");
    }
    if (!finite(nose_world)) invalid("nose_world", "must be finite");
    if (!finite(nose_drift)) invalid("nose_drift", "must be finite");
    if (!finite(food_world)) invalid("food_world", "must be finite");
    for (int j = 0; j < kNumJoints; ++j) {
        if (!std::isfinite(initial_q[j])) invalid("initial_q", "must be finite");
        if (!std::isfinite(detect_pose[j])) invalid("detect_pose", "must be finite");
    }
    if (!(noise_px >= 0.0)) invalid("noise_px", "must be >= 0");
    if (!(payload_n >= 0.0)) invalid("payload_n", "must be >= 0");
    if (!(settle_s >= 0.0)) invalid("settle_s", "must be >= 0");
    if (!(grasp_dwell_s >= 0.0)) invalid("grasp_dwell_s", "must be >= 0");
    if (!(feed_dwell_s >= 0.0)) invalid("feed_dwell_s", "must be >= 0");
    for (const ScheduledSignal& s : signals) {
        if (!(s.t >= 0.0) || !std::isfinite(s.t)) {
            invalid("signals.t", "must be finite and >= 0");
        }
        if (static_cast<int>(s.u) >= static_cast<int>(supervisor::Signal::p_found)) {
            invalid("signals.u", "only u1..u11 can be scheduled");
        }
    }
    if (camera.width <= 0 || camera.height <= 0 || !(camera.fx > 0.0) || !(camera.fy > 0.0)) {
        invalid("camera", "image size and focal lengths must be positive");
    }
    servo.validate();
    stepper.validate();
    links.validate();
}

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError,
                    "scenario: parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    check_keys(j, "",
               {"name", "nose_world", "nose_drift", "food_world", "initial_q", "detect_pose", "dt", "seed",
                "noise_px", "payload_n", "grasp_succeeds", "settle_s", "grasp_dwell_s", "feed_dwell_s", "signals",
                "camera", "servo", "stepper", "cascade", "links"});
    if (!j.contains("nose_world")) {
        invalid("nose_world", "required");
    }
    Scenario s;
    const std::string top;
    if (j.contains("name")) {
        if (!j["name"].is_string()) invalid("name", "must be a string");
        s.name = j["name"].get<std::string>();
    }
    s.nose_world = read_vec3(j, top, "nose_world", s.nose_world);
    s.nose_drift = read_vec3(j, top, "nose_drift", s.nose_drift);
    s.food_world = read_vec3(j, top, "food_world", s.food_world);
    s.initial_q = read_joints(j, top, "initial_q", s.initial_q);
    s.detect_pose = read_joints(j, top, "detect_pose", s.detect_pose);
    s.dt = read_number(j, top, "dt", s.dt);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() && !j["seed"].is_number_unsigned()) invalid("seed", "must be an integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }
    s.noise_px = read_number(j, top, "noise_px", s.noise_px);
    s.payload_n = read_number(j, top, "payload_n", s.payload_n);
    if (j.contains("grasp_succeeds")) {
        if (!j["grasp_succeeds"].is_boolean()) invalid("grasp_succeeds", "must be a boolean");
        s.grasp_succeeds = j["grasp_succeeds"].get<bool>();
    }
    s.settle_s = read_number(j, top, "settle_s", s.settle_s);
    s.grasp_dwell_s = read_number(j, top, "grasp_dwell_s", s.grasp_dwell_s);
    s.feed_dwell_s = read_number(j, top, "feed_dwell_s", s.feed_dwell_s);
    if (j.contains("signals")) {
        if (!j["signals"].is_array()) invalid("signals", "must be an array");
        for (const json& row : j["signals"]) {
            check_keys(row, "signals[]", {"t", "u"});
            if (!row.contains("u") || !row["u"].is_string()) invalid("signals[].u", "must be a signal name");
            const auto u = supervisor::parse_signal(row["u"].get<std::string>());
            if (!u) invalid("signals[].u", "unknown signal " + row["u"].get<std::string>());
            s.signals.push_back({read_number(row, "signals[]", "t", 0.0), *u});
        }
    }
    if (j.contains("camera")) parse_camera(j["camera"], s.camera);
    if (j.contains("servo")) parse_servo(j["servo"], s.servo);
    if (j.contains("stepper")) parse_stepper(j["stepper"], s.stepper);
    if (j.contains("cascade")) parse_cascade(j["cascade"], s.cascade);
    if (j.contains("links")) parse_links(j["links"], s.links);
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open scenario " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string save_scenario(const Scenario& s) {
    json j;
    j["name"] = s.name;
    j["nose_world"] = vec3_json(s.nose_world);
    j["nose_drift"] = vec3_json(s.nose_drift);
    j["food_world"] = vec3_json(s.food_world);
    j["initial_q"] = array_json(s.initial_q.q);
    j["detect_pose"] = array_json(s.detect_pose.q);
    j["dt"] = s.dt;
    j["seed"] = s.seed;
    j["noise_px"] = s.noise_px;
    j["payload_n"] = s.payload_n;
    j["grasp_succeeds"] = s.grasp_succeeds;
    j["settle_s"] = s.settle_s;
    j["grasp_dwell_s"] = s.grasp_dwell_s;
    j["feed_dwell_s"] = s.feed_dwell_s;
    j["signals"] = json::array();
    for (const ScheduledSignal& sig : s.signals) {
        j["signals"].push_back({{"t", sig.t}, {"u", supervisor::signal_name(sig.u)}});
    }
    const auto& c = s.camera;
    j["camera"] = {{"fx", c.fx}, {"fy", c.fy},       {"cx", c.cx},          {"cy", c.cy},
                   {"dist", array_json(c.dist)}, {"width", c.width}, {"height", c.height}};
    const auto& v = s.servo;
    j["servo"] = {{"x_sensitivity", v.x_sensitivity},
                  {"y_sensitivity", v.y_sensitivity},
                  {"radius_threshold", v.radius_threshold},
                  {"stable_duration", v.stable_duration},
                  {"rotation_factor_init", v.rotation_factor_init},
                  {"rotation_increment", v.rotation_increment},
                  {"initial_direction", v.initial_direction},
                  {"max_search_attempts", v.max_search_attempts},
                  {"max_plan_attempts", v.max_plan_attempts},
                  {"plan_tolerance_mm", v.plan_tolerance_mm}};
    const auto& p = s.stepper;
    j["stepper"] = {{"steps_per_rev", array_json(p.steps_per_rev)},
                    {"coupling_2_to_3", p.coupling_2_to_3},
                    {"max_rate", array_json(p.max_rate)},
                    {"accel", array_json(p.accel)}};
    const auto& g = s.cascade;
    j["cascade"] = {{"Kp1", g.Kp1}, {"Ki1", g.Ki1}, {"Kd1", g.Kd1},
                    {"Kp2", g.Kp2}, {"Ki2", g.Ki2}, {"integrator_limit", g.integrator_limit}};
    const auto& l = s.links;
    j["links"] = {{"L", json::array({l.L0, l.L1, l.L2, l.L3, l.L4})},
                  {"W", json::array({l.W2, l.W3, l.W4})},
                  {"WJ3", l.WJ3},
                  {"WJ4", l.WJ4},
                  {"m2", l.m2},
                  {"m3", l.m3},
                  {"drive_torque", array_json(l.drive_torque)},
                  {"eta_belt", l.eta_belt},
                  {"alpha_max", l.alpha_max}};
    return j.dump(2) + "\n";
}

void save_scenario_file(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write scenario " + path);
    }
    out << save_scenario(s);
    if (!out) {
        throw Error(ErrorCode::IoError, "write failed for " + path);
    }
}

bool operator==(const Scenario& a, const Scenario& b) {
    return save_scenario(a) == save_scenario(b);
}

}  // namespace feedarm::sim
