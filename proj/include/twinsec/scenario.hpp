#pragma once

// Scenario model: a single self-contained JSON document describing hosts,
// topics, command programs, the optional attack plan, guards and the safety
// envelope. Unknown keys are rejected so a typo cannot silently disable a
// mitigation. The two case-study scenarios (plus a mixed-topic variant) ship
// embedded so runs need no external files.

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "twinsec/attack.hpp"
#include "twinsec/guard.hpp"
#include "twinsec/netsim.hpp"
#include "twinsec/plant.hpp"
#include "twinsec/wire.hpp"

namespace twinsec::harness {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scenario structs

struct HostSpec {
  std::string name;
  netsim::IpAddr ip;
  netsim::MacAddr mac;
};

struct TopicSpec {
  std::string name;
  std::string type;
  std::string publisher;
  std::string subscriber;
  std::uint16_t port = 0;
  double rate_hz = 10.0;
};

struct ConstantTwistProgram {
  std::string topic;
  plant::TwistCmd cmd;
};

struct ArmRandomGoalsProgram {
  std::string topic;
  double target_min = -M_PI / 2;
  double target_max = M_PI / 4;
  double segment_s = 1.0;
};

using Program = std::variant<ConstantTwistProgram, ArmRandomGoalsProgram>;

struct RuleSpec {
  std::string path;
  std::string action;  // set | scale | add | override_stream
  double value = 0;    // set/scale/add operand, or stream start
  double step = 0;     // stream increment
};

struct AttackSpec {
  std::string attacker;
  std::string victim_a;
  std::string victim_b;
  std::string target_topic;
  double start_s = 0;
  std::optional<double> stop_s;
  std::vector<RuleSpec> rules;
};

struct AuthSpec {
  bool enabled = false;
  std::string key;
  bool sequence_numbers = false;
};

struct AnomalyPathSpec {
  std::string path;
  std::optional<double> min, max, max_step;
};

struct AnomalySpec {
  bool enabled = false;
  std::vector<AnomalyPathSpec> paths;
};

struct ZoneSpec {
  std::string joint = "shoulder_pan_joint";
  double lo = 0, hi = 0;
};

struct EnvelopeSpec {
  std::optional<double> v_max;
  std::optional<ZoneSpec> exclusion_zone;
  std::optional<double> divergence_limit;
};

enum class PlantKind { Drive, Arm };

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  double duration_s = 10.0;
  PlantKind plant = PlantKind::Drive;
  std::string command_topic;
  double command_start_s = 0.2;
  double measure_from_s = 1.0;
  std::optional<double> command_timeout_s;  // drive only; default: hold forever
  std::vector<HostSpec> hosts;
  std::vector<TopicSpec> topics;
  std::vector<Program> programs;
  std::optional<AttackSpec> attack;
  AuthSpec auth;
  AnomalySpec anomaly;
  EnvelopeSpec envelope;

  const HostSpec* find_host(std::string_view n) const {
    for (const auto& h : hosts)
      if (h.name == n) return &h;
    return nullptr;
  }
  const TopicSpec* find_topic(std::string_view n) const {
    for (const auto& t : topics)
      if (t.name == n) return &t;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& ctx) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ValidationError("unknown key '" + it.key() + "' in " + ctx);
  }
}

template <typename T>
T get_req(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ValidationError("missing key '" + std::string(key) + "' in " + ctx);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("wrong type for '" + std::string(key) + "' in " + ctx);
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("wrong type for '" + std::string(key) + "' in " + ctx);
  }
}

inline plant::TwistCmd parse_twist(const json& j, const std::string& ctx) {
  check_keys(j, {"linear", "angular"}, ctx);
  auto lin = get_req<std::vector<double>>(j, "linear", ctx);
  auto ang = get_req<std::vector<double>>(j, "angular", ctx);
  if (lin.size() != 3 || ang.size() != 3)
    throw ValidationError("linear/angular must have 3 components in " + ctx);
  plant::TwistCmd c;
  c.lx = lin[0];
  c.ly = lin[1];
  c.lz = lin[2];
  c.ax = ang[0];
  c.ay = ang[1];
  c.az = ang[2];
  return c;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<inline>");

// Reads and validates a scenario file.
inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_scenario(const Scenario& s) {
  const auto& reg = wire::builtin_schemas();

  if (s.name.empty()) throw ValidationError("scenario.name must be non-empty");
  if (!(s.duration_s > 0)) throw ValidationError("scenario.duration_s must be > 0");
  if (s.command_start_s < 0 || s.measure_from_s < 0)
    throw ValidationError("scenario timing values must be >= 0");
  if (s.command_timeout_s) {
    if (!(*s.command_timeout_s > 0))
      throw ValidationError("timing.command_timeout_s must be > 0");
    if (s.plant != PlantKind::Drive)
      throw ValidationError("timing.command_timeout_s only applies to the drive plant");
  }

  if (s.hosts.empty()) throw ValidationError("scenario.hosts must be non-empty");
  for (std::size_t i = 0; i < s.hosts.size(); ++i)
    for (std::size_t j = i + 1; j < s.hosts.size(); ++j) {
      if (s.hosts[i].name == s.hosts[j].name)
        throw ValidationError("duplicate host name: " + s.hosts[i].name);
      if (s.hosts[i].ip == s.hosts[j].ip)
        throw ValidationError("duplicate host ip: " + s.hosts[i].ip.str());
      if (s.hosts[i].mac == s.hosts[j].mac)
        throw ValidationError("duplicate host mac: " + s.hosts[i].mac.str());
    }

  for (const auto& t : s.topics) {
    if (t.name.empty() || t.name[0] != '/')
      throw ValidationError("topic name must begin with '/': " + t.name);
    if (!reg.find(t.type)) throw ValidationError("unknown message type: " + t.type);
    if (!s.find_host(t.publisher))
      throw ValidationError("topic " + t.name + " publisher host unknown: " + t.publisher);
    if (!s.find_host(t.subscriber))
      throw ValidationError("topic " + t.name + " subscriber host unknown: " + t.subscriber);
    if (!(t.rate_hz > 0)) throw ValidationError("topic " + t.name + " rate_hz must be > 0");
  }
  for (std::size_t i = 0; i < s.topics.size(); ++i)
    for (std::size_t j = i + 1; j < s.topics.size(); ++j) {
      if (s.topics[i].name == s.topics[j].name)
        throw ValidationError("duplicate topic: " + s.topics[i].name);
      if (s.topics[i].port == s.topics[j].port &&
          s.topics[i].publisher == s.topics[j].publisher)
        throw ValidationError("duplicate publisher port: " + std::to_string(s.topics[i].port));
    }

  const TopicSpec* cmd_topic = s.find_topic(s.command_topic);
  if (!cmd_topic) throw ValidationError("command_topic not among topics: " + s.command_topic);
  if (s.plant == PlantKind::Drive && cmd_topic->type != "geometry_msgs/Twist")
    throw ValidationError("drive plant needs a geometry_msgs/Twist command topic");
  if (s.plant == PlantKind::Arm && cmd_topic->type != "control_msgs/FollowJointTrajectoryActionGoal")
    throw ValidationError("arm plant needs a FollowJointTrajectoryActionGoal command topic");

  std::map<std::string, int> programs_per_topic;
  for (const auto& p : s.programs) {
    const std::string& topic = std::holds_alternative<ConstantTwistProgram>(p)
                                   ? std::get<ConstantTwistProgram>(p).topic
                                   : std::get<ArmRandomGoalsProgram>(p).topic;
    const TopicSpec* t = s.find_topic(topic);
    if (!t) throw ValidationError("program references unknown topic: " + topic);
    ++programs_per_topic[topic];
    if (std::holds_alternative<ConstantTwistProgram>(p)) {
      if (t->type != "geometry_msgs/Twist")
        throw ValidationError("constant_twist program on non-Twist topic: " + topic);
      if (!std::get<ConstantTwistProgram>(p).cmd.finite())
        throw ValidationError("constant_twist command must be finite on " + topic);
    } else {
      const auto& g = std::get<ArmRandomGoalsProgram>(p);
      if (t->type != "control_msgs/FollowJointTrajectoryActionGoal")
        throw ValidationError("arm_random_goals program on wrong-typed topic: " + topic);
      if (!(g.target_min < g.target_max))
        throw ValidationError("arm_random_goals needs target_min < target_max on " + topic);
      if (!(g.segment_s > 0))
        throw ValidationError("arm_random_goals needs segment_s > 0 on " + topic);
    }
  }
  for (const auto& t : s.topics) {
    auto it = programs_per_topic.find(t.name);
    if (it == programs_per_topic.end())
      throw ValidationError("topic has no command program: " + t.name);
    if (it->second > 1) throw ValidationError("topic has multiple programs: " + t.name);
  }

  if (s.attack) {
    const auto& a = *s.attack;
    if (!s.find_host(a.attacker))
      throw ValidationError("attack.attacker host unknown: " + a.attacker);
    if (!s.find_host(a.victim_a))
      throw ValidationError("attack.victim_a host unknown: " + a.victim_a);
    if (!s.find_host(a.victim_b))
      throw ValidationError("attack.victim_b host unknown: " + a.victim_b);
    if (a.attacker == a.victim_a || a.attacker == a.victim_b)
      throw ValidationError("attack.attacker must differ from the victims");
    if (a.target_topic.empty()) throw ValidationError("attack.target_topic must be non-empty");
    const TopicSpec* target = s.find_topic(a.target_topic);
    if (!target) throw ValidationError("attack.target_topic unknown: " + a.target_topic);
    if (a.stop_s && !(a.start_s < *a.stop_s))
      throw ValidationError("attack.start_s must precede attack.stop_s");
    const wire::MessageSchema* schema = reg.find(target->type);
    for (const auto& r : a.rules) {
      if (r.action != "set" && r.action != "scale" && r.action != "add" &&
          r.action != "override_stream")
        throw ValidationError("unknown rule action: " + r.action);
      wire::FieldPath path;
      try {
        path = wire::parse_field_path(r.path);
      } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
      }
      if (!wire::path_reaches_kind(schema->root, path, wire::Kind::Float64))
        throw ValidationError("rule path does not reach a float64 in " + target->type + ": " +
                              r.path);
      if ((r.action == "scale" || r.action == "add") && !std::isfinite(r.value))
        throw ValidationError("rule operand must be finite: " + r.path);
    }
  }

  if (s.auth.enabled && s.auth.key.empty())
    throw ValidationError("auth.key must be non-empty when auth is enabled");

  if (s.anomaly.enabled) {
    const wire::MessageSchema* schema = reg.find(cmd_topic->type);
    if (s.anomaly.paths.empty())
      throw ValidationError("anomaly guard enabled but no paths configured");
    for (const auto& p : s.anomaly.paths) {
      wire::FieldPath path;
      try {
        path = wire::parse_field_path(p.path);
      } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
      }
      if (!wire::path_reaches_kind(schema->root, path, wire::Kind::Float64))
        throw ValidationError("anomaly path does not reach a float64: " + p.path);
      if (p.max_step && !(*p.max_step > 0))
        throw ValidationError("anomaly max_step must be positive: " + p.path);
      if (p.min && p.max && !(*p.min < *p.max))
        throw ValidationError("anomaly bounds must satisfy min < max: " + p.path);
    }
  }

  if (s.envelope.v_max && !(*s.envelope.v_max > 0))
    throw ValidationError("envelope.v_max must be > 0");
  if (s.envelope.divergence_limit && !(*s.envelope.divergence_limit > 0))
    throw ValidationError("envelope.divergence_limit must be > 0");
  if (s.envelope.exclusion_zone) {
    const auto& z = *s.envelope.exclusion_zone;
    if (!plant::joint_index(z.joint))
      throw ValidationError("envelope.exclusion_zone.joint unknown: " + z.joint);
    if (!(z.lo < z.hi)) throw ValidationError("envelope.exclusion_zone needs lo < hi");
  }
}

// ---------------------------------------------------------------------------

inline Scenario parse_scenario(const std::string& text, const std::string& origin) {
  using detail::check_keys;
  using detail::get_opt;
  using detail::get_req;
  using json = nlohmann::json;

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // recover line/column from the byte offset for a usable message
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                     e.what());
  }
  if (!j.is_object()) throw ParseError(origin + ": scenario must be a JSON object");

  check_keys(j,
             {"name", "seed", "duration_s", "plant", "command_topic", "timing", "hosts", "topics",
              "programs", "attack", "guards", "envelope"},
             "scenario");

  Scenario s;
  s.name = get_req<std::string>(j, "name", "scenario");
  s.seed = get_opt<std::uint64_t>(j, "seed", "scenario").value_or(0);
  s.duration_s = get_req<double>(j, "duration_s", "scenario");
  std::string plant = get_req<std::string>(j, "plant", "scenario");
  if (plant == "drive")
    s.plant = PlantKind::Drive;
  else if (plant == "arm")
    s.plant = PlantKind::Arm;
  else
    throw ValidationError("plant must be 'drive' or 'arm', got '" + plant + "'");
  s.command_topic = get_req<std::string>(j, "command_topic", "scenario");

  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    check_keys(t, {"command_start_s", "measure_from_s", "command_timeout_s"}, "timing");
    s.command_start_s = get_opt<double>(t, "command_start_s", "timing").value_or(0.2);
    s.measure_from_s = get_opt<double>(t, "measure_from_s", "timing").value_or(1.0);
    s.command_timeout_s = get_opt<double>(t, "command_timeout_s", "timing");
  }

  for (const auto& h : get_req<json>(j, "hosts", "scenario")) {
    check_keys(h, {"name", "ip", "mac"}, "host");
    HostSpec spec;
    spec.name = get_req<std::string>(h, "name", "host");
    try {
      spec.ip = netsim::IpAddr::parse(get_req<std::string>(h, "ip", "host"));
      spec.mac = netsim::MacAddr::parse(get_req<std::string>(h, "mac", "host"));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
    s.hosts.push_back(std::move(spec));
  }

  for (const auto& t : get_req<json>(j, "topics", "scenario")) {
    check_keys(t, {"name", "type", "publisher", "subscriber", "port", "rate_hz"}, "topic");
    TopicSpec spec;
    spec.name = get_req<std::string>(t, "name", "topic");
    spec.type = get_req<std::string>(t, "type", "topic");
    spec.publisher = get_req<std::string>(t, "publisher", "topic");
    spec.subscriber = get_req<std::string>(t, "subscriber", "topic");
    spec.port = get_req<std::uint16_t>(t, "port", "topic");
    spec.rate_hz = get_req<double>(t, "rate_hz", "topic");
    s.topics.push_back(std::move(spec));
  }

  for (const auto& p : get_req<json>(j, "programs", "scenario")) {
    std::string kind = get_req<std::string>(p, "kind", "program");
    if (kind == "constant_twist") {
      check_keys(p, {"kind", "topic", "linear", "angular"}, "program");
      ConstantTwistProgram prog;
      prog.topic = get_req<std::string>(p, "topic", "program");
      prog.cmd = detail::parse_twist(
          json{{"linear", p.at("linear")}, {"angular", p.at("angular")}}, "program " + prog.topic);
      s.programs.push_back(prog);
    } else if (kind == "arm_random_goals") {
      check_keys(p, {"kind", "topic", "target_min", "target_max", "segment_s"}, "program");
      ArmRandomGoalsProgram prog;
      prog.topic = get_req<std::string>(p, "topic", "program");
      prog.target_min = get_req<double>(p, "target_min", "program");
      prog.target_max = get_req<double>(p, "target_max", "program");
      prog.segment_s = get_opt<double>(p, "segment_s", "program").value_or(1.0);
      s.programs.push_back(prog);
    } else {
      throw ValidationError("unknown program kind: " + kind);
    }
  }

  if (j.contains("attack") && !j.at("attack").is_null()) {
    const auto& a = j.at("attack");
    check_keys(a, {"attacker", "victim_a", "victim_b", "target_topic", "start_s", "stop_s", "rules"},
               "attack");
    AttackSpec spec;
    spec.attacker = get_req<std::string>(a, "attacker", "attack");
    spec.victim_a = get_req<std::string>(a, "victim_a", "attack");
    spec.victim_b = get_req<std::string>(a, "victim_b", "attack");
    spec.target_topic = get_req<std::string>(a, "target_topic", "attack");
    spec.start_s = get_req<double>(a, "start_s", "attack");
    spec.stop_s = get_opt<double>(a, "stop_s", "attack");
    for (const auto& r : get_req<json>(a, "rules", "attack")) {
      check_keys(r, {"path", "action", "value", "step"}, "rule");
      RuleSpec rule;
      rule.path = get_req<std::string>(r, "path", "rule");
      rule.action = get_req<std::string>(r, "action", "rule");
      rule.value = get_opt<double>(r, "value", "rule").value_or(0.0);
      rule.step = get_opt<double>(r, "step", "rule").value_or(0.0);
      spec.rules.push_back(std::move(rule));
    }
    s.attack = std::move(spec);
  }

  if (j.contains("guards") && !j.at("guards").is_null()) {
    const auto& g = j.at("guards");
    check_keys(g, {"auth", "anomaly"}, "guards");
    if (g.contains("auth")) {
      const auto& a = g.at("auth");
      check_keys(a, {"enabled", "key", "sequence_numbers"}, "guards.auth");
      s.auth.enabled = get_opt<bool>(a, "enabled", "guards.auth").value_or(false);
      s.auth.key = get_opt<std::string>(a, "key", "guards.auth").value_or("");
      s.auth.sequence_numbers =
          get_opt<bool>(a, "sequence_numbers", "guards.auth").value_or(false);
    }
    if (g.contains("anomaly")) {
      const auto& an = g.at("anomaly");
      check_keys(an, {"enabled", "paths"}, "guards.anomaly");
      s.anomaly.enabled = get_opt<bool>(an, "enabled", "guards.anomaly").value_or(false);
      if (an.contains("paths")) {
        for (const auto& p : an.at("paths")) {
          check_keys(p, {"path", "min", "max", "max_step"}, "anomaly path");
          AnomalyPathSpec spec;
          spec.path = get_req<std::string>(p, "path", "anomaly path");
          spec.min = get_opt<double>(p, "min", "anomaly path");
          spec.max = get_opt<double>(p, "max", "anomaly path");
          spec.max_step = get_opt<double>(p, "max_step", "anomaly path");
          s.anomaly.paths.push_back(std::move(spec));
        }
      }
    }
  }

  if (j.contains("envelope") && !j.at("envelope").is_null()) {
    const auto& e = j.at("envelope");
    check_keys(e, {"v_max", "divergence_limit", "exclusion_zone"}, "envelope");
    s.envelope.v_max = get_opt<double>(e, "v_max", "envelope");
    s.envelope.divergence_limit = get_opt<double>(e, "divergence_limit", "envelope");
    if (e.contains("exclusion_zone") && !e.at("exclusion_zone").is_null()) {
      const auto& z = e.at("exclusion_zone");
      check_keys(z, {"joint", "lo", "hi"}, "exclusion_zone");
      ZoneSpec zone;
      zone.joint = get_req<std::string>(z, "joint", "exclusion_zone");
      zone.lo = get_req<double>(z, "lo", "exclusion_zone");
      zone.hi = get_req<double>(z, "hi", "exclusion_zone");
      s.envelope.exclusion_zone = zone;
    }
  }

  validate_scenario(s);
  return s;
}

// ---------------------------------------------------------------------------
// Builtins

namespace builtins {

// TurtleBot 3 velocity escalation: the digital robot commands 1.0 m/s along
// x, the attacker rewrites linear.x to 1.5 m/s mid-run.
inline constexpr const char* kTurtlebotPitm = R"json({
  "name": "turtlebot_pitm",
  "seed": 42,
  "duration_s": 10.0,
  "plant": "drive",
  "command_topic": "/cmd_vel",
  "timing": {"command_start_s": 0.2, "measure_from_s": 1.0},
  "hosts": [
    {"name": "dts", "ip": "10.0.0.1", "mac": "02:00:00:00:00:01"},
    {"name": "cps", "ip": "10.0.0.2", "mac": "02:00:00:00:00:02"},
    {"name": "mallory", "ip": "10.0.0.66", "mac": "02:00:00:00:00:66"}
  ],
  "topics": [
    {"name": "/cmd_vel", "type": "geometry_msgs/Twist", "publisher": "dts",
     "subscriber": "cps", "port": 49152, "rate_hz": 10.0}
  ],
  "programs": [
    {"kind": "constant_twist", "topic": "/cmd_vel", "linear": [1.0, 0.0, 0.0], "angular": [0.0, 0.0, 0.0]}
  ],
  "attack": {
    "attacker": "mallory", "victim_a": "dts", "victim_b": "cps",
    "target_topic": "/cmd_vel", "start_s": 0.4,
    "rules": [{"path": "linear.x", "action": "set", "value": 1.5}]
  },
  "guards": {
    "auth": {"enabled": false, "key": "tb3-demo-key"},
    "anomaly": {"enabled": false, "paths": [
      {"path": "linear.x", "min": -2.0, "max": 2.0, "max_step": 0.2}
    ]}
  },
  "envelope": {"v_max": 1.2, "divergence_limit": 1.0}
})json";

// UR10 shoulder-pan hijack: the digital arm walks its shoulder through
// seeded random targets while the attacker overrides the commanded pan angle
// with an ever-growing sequence, driving the real arm into the exclusion
// zone occupied by the human operator.
inline constexpr const char* kUr10Pitm = R"json({
  "name": "ur10_pitm",
  "seed": 42,
  "duration_s": 30.0,
  "plant": "arm",
  "command_topic": "/arm_controller/follow_joint_trajectory/goal",
  "timing": {"command_start_s": 0.9, "measure_from_s": 1.0},
  "hosts": [
    {"name": "dts", "ip": "10.0.0.1", "mac": "02:00:00:00:00:01"},
    {"name": "cps", "ip": "10.0.0.2", "mac": "02:00:00:00:00:02"},
    {"name": "mallory", "ip": "10.0.0.66", "mac": "02:00:00:00:00:66"}
  ],
  "topics": [
    {"name": "/arm_controller/follow_joint_trajectory/goal",
     "type": "control_msgs/FollowJointTrajectoryActionGoal",
     "publisher": "dts", "subscriber": "cps", "port": 49153, "rate_hz": 1.0}
  ],
  "programs": [
    {"kind": "arm_random_goals", "topic": "/arm_controller/follow_joint_trajectory/goal",
     "target_min": -1.5707963267948966, "target_max": 0.7853981633974483, "segment_s": 1.0}
  ],
  "attack": {
    "attacker": "mallory", "victim_a": "dts", "victim_b": "cps",
    "target_topic": "/arm_controller/follow_joint_trajectory/goal", "start_s": 0.3,
    "rules": [{"path": "goal.trajectory.points[0].positions[2]",
               "action": "override_stream", "value": 0.2, "step": 0.2}]
  },
  "guards": {
    "auth": {"enabled": false, "key": "ur10-demo-key"},
    "anomaly": {"enabled": false, "paths": [
      {"path": "goal.trajectory.points[0].positions[2]", "min": -1.6, "max": 0.8, "max_step": 1.6}
    ]}
  },
  "envelope": {"exclusion_zone": {"joint": "shoulder_pan_joint",
               "lo": 1.0471975511965976, "hi": 2.0943951023931953}}
})json";

// Two topics, one attacked: /cmd_vel is rewritten while the reverse-direction
// /odom telemetry must cross the attacker byte-identical.
inline constexpr const char* kMixedTopicsPitm = R"json({
  "name": "mixed_topics_pitm",
  "seed": 42,
  "duration_s": 30.0,
  "plant": "drive",
  "command_topic": "/cmd_vel",
  "timing": {"command_start_s": 0.2, "measure_from_s": 1.0},
  "hosts": [
    {"name": "dts", "ip": "10.0.0.1", "mac": "02:00:00:00:00:01"},
    {"name": "cps", "ip": "10.0.0.2", "mac": "02:00:00:00:00:02"},
    {"name": "mallory", "ip": "10.0.0.66", "mac": "02:00:00:00:00:66"}
  ],
  "topics": [
    {"name": "/cmd_vel", "type": "geometry_msgs/Twist", "publisher": "dts",
     "subscriber": "cps", "port": 49152, "rate_hz": 10.0},
    {"name": "/odom", "type": "geometry_msgs/Twist", "publisher": "cps",
     "subscriber": "dts", "port": 49200, "rate_hz": 10.0}
  ],
  "programs": [
    {"kind": "constant_twist", "topic": "/cmd_vel", "linear": [1.0, 0.0, 0.0], "angular": [0.0, 0.0, 0.0]},
    {"kind": "constant_twist", "topic": "/odom", "linear": [0.25, 0.0, 0.0], "angular": [0.0, 0.0, 0.0]}
  ],
  "attack": {
    "attacker": "mallory", "victim_a": "dts", "victim_b": "cps",
    "target_topic": "/cmd_vel", "start_s": 0.4,
    "rules": [{"path": "linear.x", "action": "set", "value": 1.5}]
  },
  "guards": {
    "auth": {"enabled": false, "key": "mixed-demo-key"},
    "anomaly": {"enabled": false, "paths": [
      {"path": "linear.x", "min": -2.0, "max": 2.0, "max_step": 0.2}
    ]}
  },
  "envelope": {"v_max": 1.2, "divergence_limit": 1.0}
})json";

}  // namespace builtins

struct BuiltinInfo {
  std::string name;
  std::string description;
  const char* text;
};

inline const std::vector<BuiltinInfo>& builtin_scenarios() {
  static const std::vector<BuiltinInfo> list = {
      {"turtlebot_pitm",
       "TurtleBot 3 drive robot; /cmd_vel linear.x rewritten 1.0 -> 1.5 m/s",
       builtins::kTurtlebotPitm},
      {"ur10_pitm",
       "UR10 arm; shoulder_pan goal overridden with a rising sequence into the exclusion zone",
       builtins::kUr10Pitm},
      {"mixed_topics_pitm",
       "two topics, one attacked; exercises attacker selectivity on /odom",
       builtins::kMixedTopicsPitm},
  };
  return list;
}

inline std::optional<Scenario> load_builtin(const std::string& name) {
  for (const auto& b : builtin_scenarios())
    if (b.name == name) return parse_scenario(b.text, "builtin:" + name);
  return std::nullopt;
}

}  // namespace twinsec::harness
