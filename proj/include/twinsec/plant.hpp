#pragma once

// Kinematic models of the two case-study robots, instantiated twice per run
// (DTS intent vs CPS actual), plus the safety monitor that turns the gap
// between the twins into divergence and violation metrics.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinsec/netsim.hpp"
#include "twinsec/wire.hpp"

namespace twinsec::plant {

using netsim::SimTime;

// ---------------------------------------------------------------------------
// Drive robot (planar, Twist-commanded, zero-order hold)

struct TwistCmd {
  double lx = 0, ly = 0, lz = 0;
  double ax = 0, ay = 0, az = 0;

  bool finite() const {
    return std::isfinite(lx) && std::isfinite(ly) && std::isfinite(lz) && std::isfinite(ax) &&
           std::isfinite(ay) && std::isfinite(az);
  }
  double linear_speed() const { return std::sqrt(lx * lx + ly * ly + lz * lz); }

  static std::optional<TwistCmd> from_value(const wire::FieldValue& v) {
    const wire::FieldValue* lin = v.find("linear");
    const wire::FieldValue* ang = v.find("angular");
    if (!lin || !ang) return std::nullopt;
    auto comp = [](const wire::FieldValue* r, const char* n) -> std::optional<double> {
      const wire::FieldValue* f = r->find(n);
      if (!f || f->kind() != wire::Kind::Float64) return std::nullopt;
      return f->as_f64();
    };
    TwistCmd c;
    auto Lx = comp(lin, "x"), Ly = comp(lin, "y"), Lz = comp(lin, "z");
    auto Ax = comp(ang, "x"), Ay = comp(ang, "y"), Az = comp(ang, "z");
    if (!Lx || !Ly || !Lz || !Ax || !Ay || !Az) return std::nullopt;
    c.lx = *Lx;
    c.ly = *Ly;
    c.lz = *Lz;
    c.ax = *Ax;
    c.ay = *Ay;
    c.az = *Az;
    return c;
  }
};

// theta stays in (-pi, pi]
inline double normalize_angle(double theta) {
  double t = theta - 2.0 * M_PI * std::floor((theta + M_PI) / (2.0 * M_PI));
  if (t <= -M_PI) t = M_PI;  // exact boundary lands on +pi
  return t;
}

struct DrivePose {
  double x = 0, y = 0, theta = 0;
  TwistCmd last_cmd;
  SimTime stamp = 0;

  // Rejects non-finite commands; the previous command stays in force.
  bool apply_command(const TwistCmd& cmd, SimTime now) {
    if (!cmd.finite()) return false;
    last_cmd = cmd;
    stamp = now;
    return true;
  }
};

// Optional staleness cutoff for held commands (the zero-order hold itself
// never decays; scenarios opt in via command_timeout_s).
inline void expire_command(DrivePose& p, SimTime now, SimTime timeout) {
  if (now - p.stamp > timeout) p.last_cmd = TwistCmd{};
}

// One zero-order-hold integration step: body-frame velocity rotated into the
// world frame, heading advanced by the commanded yaw rate.
inline DrivePose step_drive(const DrivePose& p, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("step_drive needs dt > 0");
  DrivePose next = p;
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  next.x += (p.last_cmd.lx * c - p.last_cmd.ly * s) * dt;
  next.y += (p.last_cmd.lx * s + p.last_cmd.ly * c) * dt;
  next.theta = normalize_angle(p.theta + p.last_cmd.az * dt);
  return next;
}

// ---------------------------------------------------------------------------
// Arm robot (6 joints, piecewise-linear trajectory tracking)

inline constexpr std::array<const char*, 6> kJointOrder = {
    "elbow_joint",    "shoulder_lift_joint", "shoulder_pan_joint",
    "wrist_1_joint",  "wrist_2_joint",       "wrist_3_joint"};
inline constexpr std::size_t kShoulderPanIndex = 2;

inline std::optional<std::size_t> joint_index(std::string_view name) {
  for (std::size_t i = 0; i < kJointOrder.size(); ++i)
    if (name == kJointOrder[i]) return i;
  return std::nullopt;
}

struct TrajPoint {
  std::array<double, 6> positions{};
  double time_from_start = 0;  // seconds
};

struct ArmGoal {
  std::vector<std::string> joint_names;
  std::vector<TrajPoint> points;
};

// Extracts the tracker's view of a FollowJointTrajectoryActionGoal. The
// velocities/accelerations arrays are carried on the wire but ignored here.
inline std::optional<ArmGoal> arm_goal_from_value(const wire::FieldValue& v) {
  const wire::FieldValue* goal = v.find("goal");
  if (!goal) return std::nullopt;
  const wire::FieldValue* traj = goal->find("trajectory");
  if (!traj) return std::nullopt;
  const wire::FieldValue* names = traj->find("joint_names");
  const wire::FieldValue* points = traj->find("points");
  if (!names || !points || names->kind() != wire::Kind::Array ||
      points->kind() != wire::Kind::Array)
    return std::nullopt;
  ArmGoal out;
  for (const auto& n : names->as_array()) {
    if (n.kind() != wire::Kind::Str) return std::nullopt;
    out.joint_names.push_back(n.as_str());
  }
  for (const auto& p : points->as_array()) {
    const wire::FieldValue* pos = p.find("positions");
    const wire::FieldValue* tfs = p.find("time_from_start");
    if (!pos || !tfs || pos->kind() != wire::Kind::Array || pos->as_array().size() != 6)
      return std::nullopt;
    TrajPoint tp;
    for (std::size_t i = 0; i < 6; ++i) {
      const auto& el = pos->as_array()[i];
      if (el.kind() != wire::Kind::Float64) return std::nullopt;
      tp.positions[i] = el.as_f64();
    }
    const auto& d = tfs->as_duration();
    tp.time_from_start = static_cast<double>(d.secs) + static_cast<double>(d.nsecs) * 1e-9;
    out.points.push_back(tp);
  }
  return out;
}

enum class GoalErrc { EmptyTrajectory, BadJointNames, NonMonotonicTimes, NonFinite };

class ArmState {
 public:
  explicit ArmState(std::array<double, 6> initial = {}) : idle_angles_(initial) {}

  // A new goal replaces the active trajectory, starting from the angles the
  // arm holds right now. Invalid goals leave the state untouched.
  std::optional<GoalErrc> apply_goal(const ArmGoal& goal, SimTime now) {
    if (goal.points.empty()) return GoalErrc::EmptyTrajectory;
    if (goal.joint_names.size() != 6) return GoalErrc::BadJointNames;
    for (std::size_t i = 0; i < 6; ++i)
      if (goal.joint_names[i] != kJointOrder[i]) return GoalErrc::BadJointNames;
    double prev = 0;
    for (const auto& p : goal.points) {
      if (!(p.time_from_start > prev)) return GoalErrc::NonMonotonicTimes;
      prev = p.time_from_start;
      for (double a : p.positions)
        if (!std::isfinite(a)) return GoalErrc::NonFinite;
    }
    Active a;
    a.receipt = now;
    a.origin = angles_at(now);
    a.points = goal.points;
    active_ = std::move(a);
    return std::nullopt;
  }

  // Piecewise-linear interpolation parameterized by (now - receipt time)
  // against time_from_start, clamped at the final point.
  std::array<double, 6> angles_at(SimTime now) const {
    if (!active_) return idle_angles_;
    double s = netsim::to_seconds(now - active_->receipt);
    if (s <= 0) return active_->origin;
    const auto& pts = active_->points;
    double t_prev = 0;
    std::array<double, 6> a_prev = active_->origin;
    for (const auto& p : pts) {
      if (s <= p.time_from_start) {
        double u = (s - t_prev) / (p.time_from_start - t_prev);
        std::array<double, 6> out;
        for (std::size_t i = 0; i < 6; ++i)
          out[i] = a_prev[i] + u * (p.positions[i] - a_prev[i]);
        return out;
      }
      t_prev = p.time_from_start;
      a_prev = p.positions;
    }
    return pts.back().positions;  // clamp
  }

  bool has_active() const { return active_.has_value(); }

 private:
  struct Active {
    SimTime receipt = 0;
    std::array<double, 6> origin{};
    std::vector<TrajPoint> points;
  };
  std::array<double, 6> idle_angles_{};
  std::optional<Active> active_;
};

// ---------------------------------------------------------------------------
// Safety evaluation

struct DriveSample {
  SimTime t = 0;
  double x = 0, y = 0, theta = 0;
  TwistCmd cmd;  // command in force at the sample time
};

struct ArmSample {
  SimTime t = 0;
  std::array<double, 6> angles{};
};

struct ExclusionZone {
  std::size_t joint = kShoulderPanIndex;
  double lo = 0, hi = 0;  // radians, lo < hi
};

struct SafetyEnvelope {
  std::optional<double> v_max;             // m/s, drive
  std::optional<ExclusionZone> zone;       // arm
  std::optional<double> divergence_limit;  // meters or radians
};

enum class ViolationKind { VelocityLimit, ExclusionZone, DivergenceLimit };

inline const char* violation_kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::VelocityLimit: return "VelocityLimit";
    case ViolationKind::ExclusionZone: return "ExclusionZone";
    case ViolationKind::DivergenceLimit: return "DivergenceLimit";
  }
  return "?";
}

struct SafetyReport {
  double max_divergence = 0;
  std::optional<SimTime> first_violation_t;
  std::optional<ViolationKind> violation_kind;
  std::vector<std::pair<SimTime, double>> divergence_series;
};

namespace detail {

template <typename Sample, typename DivergenceFn, typename ViolationFn>
SafetyReport evaluate(const std::vector<Sample>& dts, const std::vector<Sample>& cps,
                      const SafetyEnvelope& env, DivergenceFn div_fn, ViolationFn viol_fn) {
  if (dts.size() != cps.size())
    throw std::invalid_argument("GridMismatch: twin series lengths differ");
  SafetyReport rep;
  auto note = [&](SimTime t, ViolationKind k) {
    if (!rep.first_violation_t || t < *rep.first_violation_t) {
      rep.first_violation_t = t;
      rep.violation_kind = k;
    }
  };
  for (std::size_t i = 0; i < dts.size(); ++i) {
    if (dts[i].t != cps[i].t)
      throw std::invalid_argument("GridMismatch: sample clocks differ");
    double d = div_fn(dts[i], cps[i]);
    rep.divergence_series.emplace_back(dts[i].t, d);
    if (d > rep.max_divergence) rep.max_divergence = d;
    if (env.divergence_limit && d > *env.divergence_limit)
      note(dts[i].t, ViolationKind::DivergenceLimit);
    if (auto k = viol_fn(cps[i])) note(cps[i].t, *k);
  }
  return rep;
}

}  // namespace detail

// Divergence for the drive robot is planar position distance; violations are
// judged on the CPS series (the side that can hurt someone).
inline SafetyReport evaluate_safety(const std::vector<DriveSample>& dts,
                                    const std::vector<DriveSample>& cps,
                                    const SafetyEnvelope& env) {
  return detail::evaluate(
      dts, cps, env,
      [](const DriveSample& a, const DriveSample& b) { return std::hypot(a.x - b.x, a.y - b.y); },
      [&](const DriveSample& s) -> std::optional<ViolationKind> {
        if (env.v_max && s.cmd.linear_speed() > *env.v_max) return ViolationKind::VelocityLimit;
        return std::nullopt;
      });
}

// Arm divergence is the largest per-joint angle gap.
inline SafetyReport evaluate_safety(const std::vector<ArmSample>& dts,
                                    const std::vector<ArmSample>& cps,
                                    const SafetyEnvelope& env) {
  return detail::evaluate(
      dts, cps, env,
      [](const ArmSample& a, const ArmSample& b) {
        double worst = 0;
        for (std::size_t i = 0; i < 6; ++i)
          worst = std::max(worst, std::abs(a.angles[i] - b.angles[i]));
        return worst;
      },
      [&](const ArmSample& s) -> std::optional<ViolationKind> {
        if (env.zone) {
          double a = s.angles[env.zone->joint];
          if (a >= env.zone->lo && a <= env.zone->hi) return ViolationKind::ExclusionZone;
        }
        return std::nullopt;
      });
}

}  // namespace twinsec::plant
