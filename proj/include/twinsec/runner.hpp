#pragma once

// Scenario executor: builds the LAN, the pub/sub graph, the twin plants and
// the optional attacker from a Scenario, drives the event loop through the
// warm-up and the measured window, then writes the trace and metrics files.
// Identical (scenario, seed) pairs produce byte-identical outputs.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "twinsec/attack.hpp"
#include "twinsec/guard.hpp"
#include "twinsec/netsim.hpp"
#include "twinsec/plant.hpp"
#include "twinsec/pubsub.hpp"
#include "twinsec/rng.hpp"
#include "twinsec/scenario.hpp"
#include "twinsec/wire.hpp"

namespace twinsec::harness {

namespace fs = std::filesystem;
using netsim::SimTime;

struct GuardCounters {
  std::uint64_t accepted = 0;
  std::uint64_t rejected_auth = 0;
  std::uint64_t rejected_anomaly = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t command_rejects = 0;  // non-finite commands, malformed goals

  std::uint64_t rejected() const { return rejected_auth + rejected_anomaly; }
};

struct RunReport {
  std::string scenario_name;
  std::uint64_t seed = 0;
  double duration_s = 0;
  bool attack_enabled = false;
  attack::AttackStatus attack_status = attack::AttackStatus::Pending;
  attack::InterceptCounters intercept;
  GuardCounters guard;
  std::uint64_t msgs_published = 0;
  plant::SafetyReport safety;
  fs::path trace_path, dts_csv_path, cps_csv_path, divergence_csv_path, metrics_csv_path;
  double wall_seconds = 0;
};

namespace detail {

// Sim timestamps are integer nanoseconds on a 10 ms grid, so microsecond
// text is lossless and stable.
inline std::string fmt_time(SimTime t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%" PRId64 ".%06" PRId64, t / 1000000000,
                (t % 1000000000) / 1000);
  return buf;
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline wire::FieldValue twist_value(const plant::TwistCmd& c) {
  auto vec = [](double x, double y, double z) {
    return wire::FieldValue::record({{"x", wire::FieldValue::float64(x)},
                                     {"y", wire::FieldValue::float64(y)},
                                     {"z", wire::FieldValue::float64(z)}});
  };
  return wire::FieldValue::record(
      {{"linear", vec(c.lx, c.ly, c.lz)}, {"angular", vec(c.ax, c.ay, c.az)}});
}

inline wire::FieldValue action_goal_value(const std::array<double, 6>& positions,
                                          double segment_s, std::uint32_t seq, SimTime now,
                                          const std::string& goal_id) {
  auto f64_array = [](const std::vector<double>& v) {
    wire::FieldValue::Array a;
    for (double d : v) a.push_back(wire::FieldValue::float64(d));
    return wire::FieldValue::array(std::move(a));
  };
  std::uint32_t secs = static_cast<std::uint32_t>(now / 1000000000);
  std::uint32_t nsecs = static_cast<std::uint32_t>(now % 1000000000);
  auto header = wire::FieldValue::record({{"seq", wire::FieldValue::uint32(seq)},
                                          {"stamp", wire::FieldValue::time(secs, nsecs)},
                                          {"frame_id", wire::FieldValue::str("")}});
  wire::FieldValue::Array names;
  for (const char* n : plant::kJointOrder) names.push_back(wire::FieldValue::str(n));
  std::int32_t tfs_secs = static_cast<std::int32_t>(segment_s);
  std::int32_t tfs_nsecs =
      static_cast<std::int32_t>(std::llround((segment_s - tfs_secs) * 1e9));
  auto point = wire::FieldValue::record(
      {{"positions", f64_array({positions.begin(), positions.end()})},
       {"velocities", f64_array({0, 0, 0, 0, 0, 0})},
       {"accelerations", f64_array({0, 0, 0, 0, 0, 0})},
       {"time_from_start", wire::FieldValue::duration(tfs_secs, tfs_nsecs)}});
  wire::FieldValue::Array points;
  points.push_back(std::move(point));
  auto trajectory = wire::FieldValue::record({{"header", header},
                                              {"joint_names", wire::FieldValue::array(names)},
                                              {"points", wire::FieldValue::array(points)}});
  auto goal = wire::FieldValue::record({{"trajectory", trajectory},
                                        {"path_tolerance", wire::FieldValue::array({})},
                                        {"goal_tolerance", wire::FieldValue::array({})},
                                        {"goal_time_tolerance", wire::FieldValue::duration(0, 0)}});
  return wire::FieldValue::record(
      {{"header", header},
       {"goal_id", wire::FieldValue::record({{"stamp", wire::FieldValue::time(secs, nsecs)},
                                             {"id", wire::FieldValue::str(goal_id)}})},
       {"goal", goal}});
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + p.string());
  return out;
}

}  // namespace detail

// Writes metrics.csv (fixed column set) and the per-step divergence series.
inline void emit_metrics(const RunReport& rep, const fs::path& metrics_csv,
                         const fs::path& divergence_csv) {
  {
    auto out = detail::open_out(divergence_csv);
    out << "t,divergence\n";
    for (const auto& [t, d] : rep.safety.divergence_series)
      out << detail::fmt_time(t) << "," << detail::fmt_double(d) << "\n";
  }
  auto out = detail::open_out(metrics_csv);
  out << "scenario,seed,duration_s,msgs_seen,msgs_mutated,msgs_rejected,max_divergence,"
         "first_violation_t,violation_kind\n";
  out << rep.scenario_name << "," << rep.seed << "," << detail::fmt_double(rep.duration_s) << ","
      << rep.intercept.seen << "," << rep.intercept.mutated << "," << rep.guard.rejected() << ","
      << detail::fmt_double(rep.safety.max_divergence) << ",";
  if (rep.safety.first_violation_t) out << detail::fmt_time(*rep.safety.first_violation_t);
  out << ",";
  if (rep.safety.violation_kind) out << plant::violation_kind_name(*rep.safety.violation_kind);
  out << "\n";
}

inline RunReport run_scenario(const Scenario& s, const fs::path& out_dir) {
  auto wall_start = std::chrono::steady_clock::now();
  validate_scenario(s);
  fs::create_directories(out_dir);

  netsim::Network net;
  pubsub::Master master;
  const auto& reg = wire::builtin_schemas();

  // hosts; the attack's designated host becomes the attacker node
  std::map<std::string, std::shared_ptr<pubsub::NodeHost>> nodes;
  std::shared_ptr<attack::AttackerHost> attacker;
  for (const auto& h : s.hosts) {
    if (s.attack && h.name == s.attack->attacker) {
      attack::AttackPlan plan;
      plan.victim_a_ip = s.find_host(s.attack->victim_a)->ip;
      plan.victim_b_ip = s.find_host(s.attack->victim_b)->ip;
      plan.target_topic = s.attack->target_topic;
      plan.start_time = netsim::sim_seconds(s.attack->start_s);
      if (s.attack->stop_s) plan.stop_time = netsim::sim_seconds(*s.attack->stop_s);
      for (const auto& r : s.attack->rules) {
        if (r.action == "set")
          plan.rules.push_back(attack::MutationRule::set(r.path, r.value));
        else if (r.action == "scale")
          plan.rules.push_back(attack::MutationRule::scale(r.path, r.value));
        else if (r.action == "add")
          plan.rules.push_back(attack::MutationRule::add(r.path, r.value));
        else
          plan.rules.push_back(attack::MutationRule::override_stream(r.path, r.value, r.step));
      }
      attacker = std::make_shared<attack::AttackerHost>(h.name, h.ip, h.mac, std::move(plan),
                                                        &master, reg);
      net.attach(attacker);
    } else {
      auto node = std::make_shared<pubsub::NodeHost>(h.name, h.ip, h.mac, reg);
      net.attach(node);
      nodes[h.name] = node;
    }
  }

  // plants: one pair of twins, commanded via the scenario's command topic
  plant::DrivePose drive_dts, drive_cps;
  plant::ArmState arm_dts, arm_cps;
  std::vector<plant::DriveSample> drive_dts_series, drive_cps_series;
  std::vector<plant::ArmSample> arm_dts_series, arm_cps_series;
  GuardCounters guard_counters;

  std::optional<guard::AuthConfig> auth_cfg;
  if (s.auth.enabled)
    auth_cfg = guard::AuthConfig{s.auth.key, s.auth.sequence_numbers};

  // publishers
  for (const auto& t : s.topics) {
    auto pub_it = nodes.find(t.publisher);
    if (pub_it == nodes.end())
      throw ValidationError("publisher host is the attacker: " + t.publisher);
    pubsub::NodeHost::AdvertiseOptions opt;
    opt.auth = auth_cfg;
    pub_it->second->advertise(master, t.name, t.type, t.port, std::move(opt));
  }

  // subscribers, wired at t=0; only the command topic feeds the CPS plant
  const SimTime end_time =
      netsim::sim_seconds(s.measure_from_s) + netsim::sim_seconds(s.duration_s);
  for (const auto& t : s.topics) {
    auto sub_it = nodes.find(t.subscriber);
    if (sub_it == nodes.end())
      throw ValidationError("subscriber host is the attacker: " + t.subscriber);
    pubsub::NodeHost::MessageCallback cb;
    if (t.name == s.command_topic && s.plant == PlantKind::Drive) {
      cb = [&drive_cps, &guard_counters](const wire::FieldValue& v, SimTime now) {
        auto cmd = plant::TwistCmd::from_value(v);
        if (!cmd || !drive_cps.apply_command(*cmd, now)) ++guard_counters.command_rejects;
      };
    } else if (t.name == s.command_topic) {
      cb = [&arm_cps, &guard_counters](const wire::FieldValue& v, SimTime now) {
        auto goal = plant::arm_goal_from_value(v);
        if (!goal || arm_cps.apply_goal(*goal, now)) ++guard_counters.command_rejects;
      };
    } else {
      cb = [](const wire::FieldValue&, SimTime) {};
    }
    pubsub::NodeHost::SubscribeOptions opt;
    opt.auth = auth_cfg;
    if (s.anomaly.enabled && t.name == s.command_topic) {
      guard::AnomalyConfig cfg;
      for (const auto& p : s.anomaly.paths)
        cfg.rules.push_back(guard::AnomalyConfig::make_rule(p.path, p.min, p.max, p.max_step));
      opt.anomaly = std::move(cfg);
    }
    sub_it->second->subscribe(master, t.name, std::move(cb), std::move(opt));
  }

  // command programs
  Rng rng(s.seed);
  for (const auto& prog : s.programs) {
    const std::string& topic_name = std::holds_alternative<ConstantTwistProgram>(prog)
                                        ? std::get<ConstantTwistProgram>(prog).topic
                                        : std::get<ArmRandomGoalsProgram>(prog).topic;
    const TopicSpec& topic = *s.find_topic(topic_name);
    pubsub::NodeHost* pub = nodes.at(topic.publisher).get();
    const bool drives_plant = topic_name == s.command_topic;
    const SimTime period = netsim::sim_seconds(1.0 / topic.rate_hz);
    std::uint32_t seq = 0;
    for (SimTime t = netsim::sim_seconds(s.command_start_s); t < end_time; t += period, ++seq) {
      if (std::holds_alternative<ConstantTwistProgram>(prog)) {
        const auto& p = std::get<ConstantTwistProgram>(prog);
        net.events().schedule(t, [&net, pub, &topic, p, drives_plant, &drive_dts] {
          pub->publish(topic.name, detail::twist_value(p.cmd));
          if (drives_plant) {
            // the DTS twin applies its own intent one nominal link latency out
            net.events().schedule(net.now() + net.link_latency(), [&drive_dts, p, &net] {
              drive_dts.apply_command(p.cmd, net.now());
            });
          }
        });
      } else {
        const auto& p = std::get<ArmRandomGoalsProgram>(prog);
        net.events().schedule(t, [&net, pub, &topic, p, drives_plant, &arm_dts, &rng, seq] {
          double target = rng.next_in(p.target_min, p.target_max);
          std::array<double, 6> positions = arm_dts.angles_at(net.now());
          positions[plant::kShoulderPanIndex] = target;
          auto value = detail::action_goal_value(positions, p.segment_s, seq, net.now(),
                                                 "goal_" + std::to_string(seq));
          pub->publish(topic.name, value);
          if (drives_plant) {
            plant::ArmGoal goal;
            goal.joint_names.assign(plant::kJointOrder.begin(), plant::kJointOrder.end());
            plant::TrajPoint tp;
            tp.positions = positions;
            tp.time_from_start = p.segment_s;
            goal.points.push_back(tp);
            net.events().schedule(net.now() + net.link_latency(), [&arm_dts, goal, &net] {
              arm_dts.apply_goal(goal, net.now());
            });
          }
        });
      }
    }
  }

  // plant sampling at 100 Hz across the measured window
  const double dt = 0.01;
  const SimTime dt_ns = netsim::sim_ms(10);
  const SimTime t0 = netsim::sim_seconds(s.measure_from_s);
  const std::int64_t steps = netsim::sim_seconds(s.duration_s) / dt_ns;
  for (std::int64_t k = 0; k <= steps; ++k) {
    net.events().schedule(t0 + k * dt_ns, [&, k] {
      SimTime now = t0 + k * dt_ns;
      if (s.plant == PlantKind::Drive) {
        if (k > 0) {
          if (s.command_timeout_s) {
            SimTime limit = netsim::sim_seconds(*s.command_timeout_s);
            plant::expire_command(drive_dts, now, limit);
            plant::expire_command(drive_cps, now, limit);
          }
          drive_dts = plant::step_drive(drive_dts, dt);
          drive_cps = plant::step_drive(drive_cps, dt);
        }
        drive_dts_series.push_back(
            {now, drive_dts.x, drive_dts.y, drive_dts.theta, drive_dts.last_cmd});
        drive_cps_series.push_back(
            {now, drive_cps.x, drive_cps.y, drive_cps.theta, drive_cps.last_cmd});
      } else {
        arm_dts_series.push_back({now, arm_dts.angles_at(now)});
        arm_cps_series.push_back({now, arm_cps.angles_at(now)});
      }
    });
  }

  if (attacker) attacker->arm();

  net.events().run_until(end_time);

  // safety evaluation over the twin series
  plant::SafetyEnvelope env;
  env.v_max = s.envelope.v_max;
  env.divergence_limit = s.envelope.divergence_limit;
  if (s.envelope.exclusion_zone) {
    plant::ExclusionZone z;
    z.joint = *plant::joint_index(s.envelope.exclusion_zone->joint);
    z.lo = s.envelope.exclusion_zone->lo;
    z.hi = s.envelope.exclusion_zone->hi;
    env.zone = z;
  }

  RunReport rep;
  rep.scenario_name = s.name;
  rep.seed = s.seed;
  rep.duration_s = s.duration_s;
  rep.attack_enabled = static_cast<bool>(attacker);
  if (attacker) {
    rep.attack_status = attacker->status();
    rep.intercept = attacker->counters();
  }
  rep.safety = s.plant == PlantKind::Drive
                   ? plant::evaluate_safety(drive_dts_series, drive_cps_series, env)
                   : plant::evaluate_safety(arm_dts_series, arm_cps_series, env);

  for (const auto& t : s.topics) {
    const auto& c = nodes.at(t.subscriber)->sub_counters(t.name);
    guard_counters.accepted += c.delivered;
    guard_counters.rejected_auth += c.rejected_auth;
    guard_counters.rejected_anomaly += c.rejected_anomaly;
    guard_counters.decode_errors += c.decode_errors;
    rep.msgs_published += nodes.at(t.publisher)->published(t.name);
  }
  rep.guard = guard_counters;

  // outputs
  rep.trace_path = out_dir / "trace.jsonl";
  rep.dts_csv_path = out_dir / "dts_state.csv";
  rep.cps_csv_path = out_dir / "cps_state.csv";
  rep.divergence_csv_path = out_dir / "divergence.csv";
  rep.metrics_csv_path = out_dir / "metrics.csv";

  {
    auto out = detail::open_out(rep.trace_path);
    net.trace().write_jsonl(out);
  }
  auto write_drive = [&](const fs::path& p, const std::vector<plant::DriveSample>& series) {
    auto out = detail::open_out(p);
    out << "t,x,y,theta\n";
    for (const auto& smp : series)
      out << detail::fmt_time(smp.t) << "," << detail::fmt_double(smp.x) << ","
          << detail::fmt_double(smp.y) << "," << detail::fmt_double(smp.theta) << "\n";
  };
  auto write_arm = [&](const fs::path& p, const std::vector<plant::ArmSample>& series) {
    auto out = detail::open_out(p);
    out << "t,j1,j2,j3,j4,j5,j6\n";
    for (const auto& smp : series) {
      out << detail::fmt_time(smp.t);
      for (double a : smp.angles) out << "," << detail::fmt_double(a);
      out << "\n";
    }
  };
  if (s.plant == PlantKind::Drive) {
    write_drive(rep.dts_csv_path, drive_dts_series);
    write_drive(rep.cps_csv_path, drive_cps_series);
  } else {
    write_arm(rep.dts_csv_path, arm_dts_series);
    write_arm(rep.cps_csv_path, arm_cps_series);
  }
  emit_metrics(rep, rep.metrics_csv_path, rep.divergence_csv_path);

  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return rep;
}

}  // namespace twinsec::harness
