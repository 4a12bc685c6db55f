// SPDX-License-Identifier: Apache-2.0
// End-to-end runs of the command-line tool.
#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = NOMABF_CLI;
const std::string kData = NOMABF_TEST_DATA;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nomabf_cli_" + name);
  fs::remove_all(p);
  return p;
}

json load(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SolveScalarInstance) {
  const auto out = scratch("scalar");
  EXPECT_EQ(run("solve --config " + kData + "/scalar.json --out " + out.string()), 0);
  const json r = load(out / "result.json");
  EXPECT_EQ(r["status"], "converged");
  EXPECT_NEAR(r["objective"].get<double>(), 1.5, 1e-4);
  EXPECT_EQ(r["exit_code"], 0);
}

TEST(Cli, SolveInfeasibleExitCode) {
  const auto out = scratch("infeasible");
  EXPECT_EQ(run("solve --config " + kData + "/infeasible.json --out " + out.string()), 2);
  const json r = load(out / "result.json");
  EXPECT_EQ(r["status"], "restriction_infeasible");
  EXPECT_TRUE(r["objective"].is_null());
  EXPECT_TRUE(r["trace"]["problem_infeasible"].get<bool>());
}

TEST(Cli, SolveMaxItersExitCode) {
  // one iteration cannot meet the stopping rule, which needs two optima
  const auto out = scratch("maxit");
  json j = load(kData + "/scalar.json");
  j["solver"] = {{"max_iters", 1}};
  fs::create_directories(out);
  std::ofstream(out / "in.json") << j.dump();
  EXPECT_EQ(run("solve --config " + (out / "in.json").string() + " --out " + out.string()), 3);
  EXPECT_EQ(load(out / "result.json")["status"], "max_iters");
}

TEST(Cli, MissingFieldIsConfigError) {
  const auto out = scratch("missing");
  EXPECT_EQ(run("solve --config " + kData + "/missing_field.json --out " + out.string()), 4);
  const json r = load(out / "result.json");
  EXPECT_EQ(r["status"], "config_error");
  EXPECT_EQ(r["field"], "$.users");
}

TEST(Cli, UnreadableConfigIsConfigError) {
  const auto out = scratch("noconfig");
  EXPECT_EQ(run("solve --config /nonexistent.json --out " + out.string()), 4);
  EXPECT_TRUE(fs::exists(out / "result.json"));
}

TEST(Cli, UnknownFlagAndBackend) {
  EXPECT_EQ(run("solve --bogus"), 4);
  const auto out = scratch("backend");
  EXPECT_EQ(run("solve --config " + kData + "/scalar.json --backend mosek --out " + out.string()), 4);
}

TEST(Cli, TightnessNeedsPsdBackend) { EXPECT_EQ(run("check tightness --backend reference"), 5); }

TEST(Cli, CheckSuitesPass) {
  EXPECT_EQ(run("check eq7"), 0);
  EXPECT_EQ(run("check monotone --trials 10"), 0);
  EXPECT_EQ(run("check tightness --trials 10"), 0);
  EXPECT_EQ(run("check nonsense"), 4);
}

TEST(Cli, ExperimentPresetDeterministic) {
  const auto a = scratch("exp_a");
  const auto b = scratch("exp_b");
  EXPECT_EQ(run("experiment example1 --trials 3 --out " + a.string()), 0);
  EXPECT_EQ(run("experiment example1 --trials 3 --threads 3 --out " + b.string()), 0);
  const std::string ca = slurp(a / "example1.csv");
  EXPECT_FALSE(ca.empty());
  EXPECT_EQ(ca, slurp(b / "example1.csv"));
  const json s = load(a / "example1_summary.json");
  EXPECT_EQ(s["metadata"]["num_trials"], 3);
  EXPECT_EQ(s["metadata"]["backend"], "reference");
}

TEST(Cli, ExperimentUnknownPreset) { EXPECT_EQ(run("experiment example9"), 4); }

TEST(Cli, DumpWritesProgram) {
  const auto out = scratch("dump");
  EXPECT_EQ(run("dump --config " + kData + "/scalar.json --out " + out.string()), 0);
  const json p = load(out / "restriction.json");
  EXPECT_TRUE(p.contains("blocks"));
  EXPECT_EQ(run("dump --program sdp --config " + kData + "/scalar.json --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "sdp.json"));
}
