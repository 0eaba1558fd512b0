#include "twinsec/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace twinsec;
using namespace twinsec::harness;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("twinsec_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Scenario, BuiltinTurtlebotLoads) {
  auto s = load_builtin("turtlebot_pitm");
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->plant, PlantKind::Drive);
  EXPECT_EQ(s->command_topic, "/cmd_vel");
  ASSERT_TRUE(s->attack.has_value());
  ASSERT_EQ(s->attack->rules.size(), 1u);
  EXPECT_EQ(s->attack->rules[0].path, "linear.x");
  EXPECT_EQ(s->attack->rules[0].action, "set");
  EXPECT_DOUBLE_EQ(s->attack->rules[0].value, 1.5);
  const auto* prog = std::get_if<ConstantTwistProgram>(&s->programs[0]);
  ASSERT_NE(prog, nullptr);
  EXPECT_DOUBLE_EQ(prog->cmd.lx, 1.0);
}

TEST(Scenario, BuiltinUr10Loads) {
  auto s = load_builtin("ur10_pitm");
  ASSERT_TRUE(s.has_value());
  EXPECT_EQ(s->plant, PlantKind::Arm);
  ASSERT_TRUE(s->attack.has_value());
  EXPECT_EQ(s->attack->rules[0].action, "override_stream");
  EXPECT_EQ(s->attack->rules[0].path, "goal.trajectory.points[0].positions[2]");
  ASSERT_TRUE(s->envelope.exclusion_zone.has_value());
  EXPECT_EQ(s->envelope.exclusion_zone->joint, "shoulder_pan_joint");
}

TEST(Scenario, UnknownBuiltinAbsent) {
  EXPECT_FALSE(load_builtin("no_such_scenario").has_value());
}

TEST(Scenario, UnknownKeyRejected) {
  std::string text = builtins::kTurtlebotPitm;
  text.insert(text.rfind('}'), R"(, "surprise": 1)");
  try {
    parse_scenario(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("surprise"), std::string::npos);
  }
}

TEST(Scenario, UnknownHostInAttackRejected) {
  std::string text = builtins::kTurtlebotPitm;
  auto pos = text.find("\"victim_b\": \"cps\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, std::string("\"victim_b\": \"cps\"").size(), "\"victim_b\": \"ghost\"");
  try {
    parse_scenario(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("victim_b"), std::string::npos);
  }
}

TEST(Scenario, ParseErrorCarriesPosition) {
  try {
    parse_scenario("{\n  \"name\": oops\n}", "bad.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:2"), std::string::npos) << e.what();
  }
}

TEST(Scenario, BadRulePathRejected) {
  std::string text = builtins::kTurtlebotPitm;
  auto pos = text.find("\"path\": \"linear.x\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, std::string("\"path\": \"linear.x\"").size(), "\"path\": \"linear.q\"");
  EXPECT_THROW(parse_scenario(text), ValidationError);
}

TEST(Scenario, FileRoundTrip) {
  fs::path dir = fresh_dir("scenario_file");
  fs::path file = dir / "custom.json";
  {
    std::ofstream out(file);
    out << builtins::kTurtlebotPitm;
  }
  Scenario s = load_scenario_file(file.string());
  EXPECT_EQ(s.name, "turtlebot_pitm");
  EXPECT_THROW(load_scenario_file((dir / "missing.json").string()), ParseError);
}

TEST(Runner, TurtlebotAttackReport) {
  auto s = *load_builtin("turtlebot_pitm");
  RunReport rep = run_scenario(s, fresh_dir("tb_attack"));
  EXPECT_EQ(rep.attack_status, attack::AttackStatus::Active);
  EXPECT_NEAR(rep.safety.max_divergence, 5.0, 0.05);
  ASSERT_TRUE(rep.safety.violation_kind.has_value());
  EXPECT_EQ(*rep.safety.violation_kind, plant::ViolationKind::VelocityLimit);
  EXPECT_GT(rep.intercept.mutated, 0u);
  EXPECT_EQ(rep.intercept.seen, rep.intercept.forwarded);
  EXPECT_TRUE(fs::exists(rep.trace_path));
  EXPECT_TRUE(fs::exists(rep.metrics_csv_path));
}

TEST(Runner, TurtlebotBaselineCoherent) {
  auto s = *load_builtin("turtlebot_pitm");
  s.attack.reset();
  RunReport rep = run_scenario(s, fresh_dir("tb_baseline"));
  EXPECT_LE(rep.safety.max_divergence, 1e-9);
  EXPECT_FALSE(rep.safety.first_violation_t.has_value());
  EXPECT_EQ(rep.intercept.seen, 0u);
  EXPECT_EQ(rep.guard.rejected(), 0u);
}

TEST(Runner, AuthRejectsEveryMutation) {
  auto s = *load_builtin("turtlebot_pitm");
  s.auth.enabled = true;
  RunReport rep = run_scenario(s, fresh_dir("tb_auth"));
  EXPECT_GT(rep.intercept.mutated, 0u);
  EXPECT_EQ(rep.guard.rejected_auth, rep.intercept.mutated);
  EXPECT_LE(rep.safety.max_divergence, 1e-9);
}

TEST(Runner, AuthTransparencyBitIdenticalSeries) {
  // without an attacker, tagging must not change plant behavior at all
  auto s = *load_builtin("turtlebot_pitm");
  s.attack.reset();
  RunReport plain = run_scenario(s, fresh_dir("transp_plain"));
  s.auth.enabled = true;
  RunReport tagged = run_scenario(s, fresh_dir("transp_auth"));
  EXPECT_EQ(slurp(plain.cps_csv_path), slurp(tagged.cps_csv_path));
  EXPECT_EQ(slurp(plain.dts_csv_path), slurp(tagged.dts_csv_path));
  EXPECT_EQ(slurp(plain.divergence_csv_path), slurp(tagged.divergence_csv_path));
  EXPECT_EQ(tagged.guard.rejected(), 0u);
  EXPECT_EQ(tagged.guard.accepted, plain.guard.accepted);
}

TEST(Runner, SequenceNumberedAuthStaysSynced) {
  auto s = *load_builtin("turtlebot_pitm");
  s.attack.reset();
  s.auth.enabled = true;
  s.auth.sequence_numbers = true;
  RunReport rep = run_scenario(s, fresh_dir("seq_auth"));
  EXPECT_EQ(rep.guard.rejected(), 0u) << "implicit counters stay aligned on a clean channel";
  EXPECT_GT(rep.guard.accepted, 100u);
  EXPECT_LE(rep.safety.max_divergence, 1e-9);
}

TEST(Runner, AnomalyRejectsStepChange) {
  auto s = *load_builtin("turtlebot_pitm");
  s.anomaly.enabled = true;
  RunReport rep = run_scenario(s, fresh_dir("tb_anomaly"));
  EXPECT_GT(rep.intercept.mutated, 0u);
  EXPECT_EQ(rep.guard.rejected_anomaly, rep.intercept.mutated);
  EXPECT_LE(rep.safety.max_divergence, 1e-9);
}

TEST(Runner, MetricsCsvShape) {
  auto s = *load_builtin("turtlebot_pitm");
  RunReport rep = run_scenario(s, fresh_dir("tb_metrics"));
  std::string metrics = slurp(rep.metrics_csv_path);
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')),
            "scenario,seed,duration_s,msgs_seen,msgs_mutated,msgs_rejected,max_divergence,"
            "first_violation_t,violation_kind");
  EXPECT_NE(metrics.find("turtlebot_pitm,42,10,"), std::string::npos);
  EXPECT_NE(metrics.find("VelocityLimit"), std::string::npos);

  // baseline: no mutations, empty violation column
  s.attack.reset();
  RunReport base = run_scenario(s, fresh_dir("tb_metrics_base"));
  std::string base_metrics = slurp(base.metrics_csv_path);
  auto last_line = base_metrics.substr(base_metrics.find('\n') + 1);
  EXPECT_NE(last_line.find(",,"), std::string::npos) << "empty violation fields";
}

TEST(Runner, Ur10AttackMonotonePan) {
  auto s = *load_builtin("ur10_pitm");
  RunReport rep = run_scenario(s, fresh_dir("ur10_attack"));
  ASSERT_TRUE(rep.safety.violation_kind.has_value());
  EXPECT_EQ(*rep.safety.violation_kind, plant::ViolationKind::ExclusionZone);

  // cps pan strictly monotone across all samples, straight from the CSV
  std::string csv = slurp(rep.cps_csv_path);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,j1,j2,j3,j4,j5,j6");
  double prev = -1e9;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string cell;
    for (int i = 0; i < 4; ++i) std::getline(ls, cell, ',');  // t,j1,j2,j3 -> pan is j3
    double pan = std::stod(cell);
    EXPECT_GT(pan, prev) << "row " << rows;
    prev = pan;
    ++rows;
  }
  EXPECT_EQ(rows, 3001u);
}

TEST(Runner, Ur10BaselineCoherent) {
  auto s = *load_builtin("ur10_pitm");
  s.attack.reset();
  RunReport rep = run_scenario(s, fresh_dir("ur10_baseline"));
  EXPECT_LE(rep.safety.max_divergence, 1e-9);
  EXPECT_FALSE(rep.safety.first_violation_t.has_value());
}

TEST(Runner, DivergenceZeroBeforeMutationTakesEffect) {
  // attack starting inside the measured window: divergence must be exactly 0
  // until the first mutated command lands, positive afterwards
  auto s = *load_builtin("turtlebot_pitm");
  s.attack->start_s = 3.0;  // poison completes ~3.101, first mutated command ~3.2
  RunReport rep = run_scenario(s, fresh_dir("tb_onset"));
  ASSERT_FALSE(rep.safety.divergence_series.empty());
  bool seen_positive = false;
  for (const auto& [t, d] : rep.safety.divergence_series) {
    if (t < netsim::sim_seconds(3.1)) {
      EXPECT_EQ(d, 0.0) << "divergence before the attack at t=" << netsim::to_seconds(t);
    }
    if (d > 0) seen_positive = true;
  }
  EXPECT_TRUE(seen_positive);
  ASSERT_TRUE(rep.safety.first_violation_t.has_value());
  EXPECT_GE(*rep.safety.first_violation_t, netsim::sim_seconds(3.0))
      << "violation time at or after attack start";
}

TEST(Runner, DeterministicOutputs) {
  auto s = *load_builtin("turtlebot_pitm");
  RunReport a = run_scenario(s, fresh_dir("det_a"));
  RunReport b = run_scenario(s, fresh_dir("det_b"));
  EXPECT_EQ(slurp(a.trace_path), slurp(b.trace_path));
  EXPECT_EQ(slurp(a.dts_csv_path), slurp(b.dts_csv_path));
  EXPECT_EQ(slurp(a.cps_csv_path), slurp(b.cps_csv_path));
  EXPECT_EQ(slurp(a.divergence_csv_path), slurp(b.divergence_csv_path));
  EXPECT_EQ(slurp(a.metrics_csv_path), slurp(b.metrics_csv_path));
}

TEST(Runner, CommandTimeoutGatesMotion) {
  // 1 Hz commands with a 0.5 s hold limit: the robot moves in half-second
  // bursts instead of continuously
  auto s = *load_builtin("turtlebot_pitm");
  s.attack.reset();
  for (auto& t : s.topics) t.rate_hz = 1.0;
  s.duration_s = 3.0;
  RunReport continuous = run_scenario(s, fresh_dir("timeout_off"));
  s.command_timeout_s = 0.5;
  RunReport gated = run_scenario(s, fresh_dir("timeout_on"));

  auto final_x = [](const RunReport& r) {
    std::string csv = slurp(r.cps_csv_path);
    auto last_nl = csv.rfind('\n', csv.size() - 2);
    std::istringstream row(csv.substr(last_nl + 1));
    std::string t, x;
    std::getline(row, t, ',');
    std::getline(row, x, ',');
    return std::stod(x);
  };
  double x_cont = final_x(continuous), x_gated = final_x(gated);
  EXPECT_NEAR(x_cont, 3.0, 0.05);
  EXPECT_NEAR(x_gated, 1.5, 0.06);
  // both twins time out identically, so coherence is preserved
  EXPECT_LE(gated.safety.max_divergence, 1e-9);
}

TEST(Scenario, ShippedSampleFilesLoadAndRun) {
  std::size_t found = 0;
  for (const auto& entry : fs::directory_iterator(TWINSEC_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++found;
    Scenario s = load_scenario_file(entry.path().string());
    EXPECT_FALSE(s.name.empty());
  }
  EXPECT_GE(found, 2u);
  // one full run of a sample to prove the files are executable, not just valid
  Scenario s = load_scenario_file((fs::path(TWINSEC_SCENARIO_DIR) / "ur10_wide_walk.json").string());
  RunReport rep = run_scenario(s, fresh_dir("sample_run"));
  EXPECT_GT(rep.intercept.mutated, 0u);
}

TEST(Runner, SeedChangesArmTrace) {
  auto s = *load_builtin("ur10_pitm");
  RunReport a = run_scenario(s, fresh_dir("seed_a"));
  s.seed = 43;
  RunReport b = run_scenario(s, fresh_dir("seed_b"));
  EXPECT_NE(slurp(a.dts_csv_path), slurp(b.dts_csv_path)) << "different goals under new seed";
}

}  // namespace
