// Exercises the installed CLI contract through real subprocesses: exit codes
// (0 clean, 1 validation, 2 runtime), stderr-only errors, file outputs.

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& cmd) {
  CmdResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kCli = TWINSEC_CLI_PATH;

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("twinsec_cli_" + tag);
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

TEST(Cli, ListBuiltins) {
  CmdResult r = run_cmd(kCli + " list-builtins");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("turtlebot_pitm"), std::string::npos);
  EXPECT_NE(r.out.find("ur10_pitm"), std::string::npos);
  EXPECT_NE(r.out.find("mixed_topics_pitm"), std::string::npos);
}

TEST(Cli, RunBuiltinProducesFiles) {
  fs::path dir = fresh_dir("run");
  CmdResult r = run_cmd(kCli + " run turtlebot_pitm --out " + dir.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(fs::exists(dir / "trace.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "dts_state.csv"));
  EXPECT_TRUE(fs::exists(dir / "cps_state.csv"));
  EXPECT_TRUE(fs::exists(dir / "divergence.csv"));
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
  EXPECT_NE(r.out.find("VelocityLimit"), std::string::npos);
}

TEST(Cli, EnvVarDefaultOutDir) {
  fs::path dir = fresh_dir("env_out");
  CmdResult r = run_cmd("TWINSEC_OUT=" + dir.string() + " " + kCli + " run turtlebot_pitm");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
}

TEST(Cli, ValidationErrorsExitOneOnStderrOnly) {
  CmdResult quiet = run_cmd(kCli + " run no_such_scenario 2>/dev/null");
  EXPECT_EQ(quiet.exit_code, 1);
  EXPECT_TRUE(quiet.out.empty()) << "errors must not reach stdout";
  CmdResult loud = run_cmd(kCli + " run no_such_scenario 2>&1");
  EXPECT_NE(loud.out.find("no builtin or file"), std::string::npos);
}

TEST(Cli, MalformedScenarioFileExitsOne) {
  fs::path dir = fresh_dir("badjson");
  fs::path file = dir / "bad.json";
  std::ofstream(file) << "{ not json";
  CmdResult r = run_cmd(kCli + " run " + file.string() + " 2>&1");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("bad.json:1"), std::string::npos) << "parse errors carry position";
}

TEST(Cli, RuntimeErrorsExitTwo) {
  // an output directory that cannot exist forces an IO failure
  CmdResult r = run_cmd(kCli + " run turtlebot_pitm --out /dev/null/impossible 2>&1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("runtime error"), std::string::npos);
}

TEST(Cli, NoAttackFlag) {
  fs::path dir = fresh_dir("noattack");
  CmdResult r = run_cmd(kCli + " run turtlebot_pitm --no-attack --out " + dir.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("attack:          disabled"), std::string::npos);
  EXPECT_NE(r.out.find("violation:       none"), std::string::npos);
}

TEST(Cli, SeedOverrideChangesArmOutputs) {
  fs::path a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
  ASSERT_EQ(run_cmd(kCli + " run ur10_pitm --out " + a.string()).exit_code, 0);
  ASSERT_EQ(run_cmd(kCli + " run ur10_pitm --seed 7 --out " + b.string()).exit_code, 0);
  std::string sa = slurp(a / "dts_state.csv"), sb = slurp(b / "dts_state.csv");
  EXPECT_FALSE(sa.empty());
  EXPECT_NE(sa, sb) << "--seed must reseed the goal generator";
}

TEST(Cli, CodecGoldenVector) {
  std::string zero48(96, '0');
  CmdResult r = run_cmd(kCli + " codec --schema geometry_msgs/Twist --hex 30000000" + zero48);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("round-trip: ok"), std::string::npos);
  CmdResult bad = run_cmd(kCli + " codec --schema nope/Nope --hex 00 2>&1");
  EXPECT_EQ(bad.exit_code, 1);
}

TEST(Cli, InspectDecodesTrace) {
  fs::path dir = fresh_dir("inspect");
  ASSERT_EQ(run_cmd(kCli + " run turtlebot_pitm --out " + dir.string()).exit_code, 0);
  CmdResult r = run_cmd(kCli + " inspect " + (dir / "trace.jsonl").string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("topic=/cmd_vel"), std::string::npos);
  EXPECT_NE(r.out.find("pitm=mutated"), std::string::npos);
  EXPECT_NE(r.out.find("x: 1.5"), std::string::npos);
}

}  // namespace
