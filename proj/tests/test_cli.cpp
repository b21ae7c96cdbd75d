// Drives the built CLI binary end to end. QUIVERBL_BIN and QUIVERBL_DATA are
// injected by CTest.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct CliResult {
  int exit_code = -1;
  std::string output;

  Json json() const { return Json::parse(output); }
};

std::string binary_path() {
  const char* bin = std::getenv("QUIVERBL_BIN");
  if (bin == nullptr) throw std::runtime_error("QUIVERBL_BIN not set");
  return bin;
}

std::string data_path(const std::string& name) {
  const char* dir = std::getenv("QUIVERBL_DATA");
  if (dir == nullptr) throw std::runtime_error("QUIVERBL_DATA not set");
  return (fs::path(dir) / name).string();
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd = env_prefix + binary_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  CliResult result;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) result.output.append(buffer, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("quiverbl_cli_test_" + name);
}

TEST(Cli, CapacityOfGeometricDatum) {
  const CliResult r = run_cli("capacity " + data_path("coord_lines.json") + " --json");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Json j = r.json();
  EXPECT_EQ(j["command"], "capacity");
  EXPECT_NEAR(j["result"]["cap"].get<double>(), 1.0, 1e-8);
  EXPECT_NEAR(j["result"]["bl"].get<double>(), 1.0, 1e-8);
  EXPECT_EQ(j["result"]["status"], "Converged");
  EXPECT_TRUE(j.contains("config"));
  EXPECT_EQ(j["config"]["output_mode"], "json");
}

TEST(Cli, CapacityOfCollapsedDatumReportsInfBl) {
  const CliResult r = run_cli("capacity " + data_path("rank_deficient.json") + " --json");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Json j = r.json();
  EXPECT_EQ(j["result"]["cap"].get<double>(), 0.0);
  EXPECT_EQ(j["result"]["bl"], "inf");
  EXPECT_EQ(j["result"]["status"], "Collapsed");
}

TEST(Cli, CapacityScalarClosedForm) {
  const CliResult r = run_cli("capacity " + data_path("scalar3.json") + " --json");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NEAR(r.json()["result"]["cap"].get<double>(), 9.0, 1e-8);
}

TEST(Cli, ScaleHitsIterationCapOnSlowInstance) {
  const CliResult r =
      run_cli("scale " + data_path("jordan_pair.json") + " --max-iters 5 --json");
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_EQ(r.json()["result"]["status"], "MaxIterations");
}

TEST(Cli, ScaleWritesScaledDatum) {
  const fs::path out = temp_file("scaled.json");
  const CliResult r = run_cli("scale " + data_path("stretched_lines.json") + " --out " +
                              out.string() + " --json");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(r.json()["result"]["status"], "Converged");
  const CliResult check = run_cli("geometric " + out.string() + " --json");
  EXPECT_TRUE(check.json()["result"]["is_geometric"].get<bool>());
  fs::remove(out);
}

TEST(Cli, ValidateGoodAndBadFiles) {
  EXPECT_EQ(run_cli("validate " + data_path("coord_lines.json")).exit_code, 0);

  const fs::path bad = temp_file("broken.json");
  std::ofstream(bad) << "{ not json";
  EXPECT_EQ(run_cli("validate " + bad.string()).exit_code, 3);
  fs::remove(bad);

  EXPECT_EQ(run_cli("validate /nonexistent/file.json").exit_code, 3);
}

TEST(Cli, ValidateReportsViolations) {
  const fs::path invalid = temp_file("invalid_shape.json");
  Json j = Json::parse(std::ifstream(data_path("coord_lines.json")));
  j["matrices"]["a1"] = Json::array({Json::array({1.0, 0.0}), Json::array({0.0, 1.0})});
  std::ofstream(invalid) << j.dump();
  const CliResult r = run_cli("validate " + invalid.string() + " --json");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_FALSE(r.json()["result"]["valid"].get<bool>());
  fs::remove(invalid);
}

TEST(Cli, ObjectiveAtProvidedY) {
  const CliResult r = run_cli("objective " + data_path("stretched_lines.json") + " --y " +
                              data_path("ones_y.json") + " --json");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NEAR(r.json()["result"]["value"].get<double>(), 4.0, 1e-10);
}

TEST(Cli, GeometricResiduals) {
  const CliResult r = run_cli("geometric " + data_path("coord_lines.json") + " --json");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_TRUE(r.json()["result"]["is_geometric"].get<bool>());
  EXPECT_NEAR(r.json()["result"]["max_residual"].get<double>(), 0.0, 1e-12);

  const CliResult s = run_cli("geometric " + data_path("stretched_lines.json") + " --json");
  EXPECT_FALSE(s.json()["result"]["is_geometric"].get<bool>());
}

TEST(Cli, OracleFindsClosedForm) {
  const CliResult r = run_cli("oracle " + data_path("stretched_lines.json") + " --json");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NEAR(r.json()["result"]["best_value"].get<double>(), 4.0, 1e-3);
}

TEST(Cli, FeasibleClassification) {
  const CliResult feasible = run_cli("feasible " + data_path("coord_lines.json") + " --json");
  ASSERT_EQ(feasible.exit_code, 0);
  EXPECT_EQ(feasible.json()["result"]["classification"], "Feasible");

  const CliResult infeasible =
      run_cli("feasible " + data_path("rank_deficient.json") + " --json");
  ASSERT_EQ(infeasible.exit_code, 0);
  EXPECT_EQ(infeasible.json()["result"]["classification"], "Infeasible");
  EXPECT_EQ(infeasible.json()["result"]["certificate"]["slack"].get<double>(), -1.0);
}

TEST(Cli, SubrepsScan) {
  const CliResult r = run_cli("subreps " + data_path("rank_deficient.json") + " --json");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.json()["result"]["violation_count"].get<int>(), 1);

  const CliResult clean = run_cli("subreps " + data_path("coord_lines.json") + " --json");
  EXPECT_EQ(clean.json()["result"]["violation_count"].get<int>(), 0);
}

TEST(Cli, DegenerateConclusive) {
  const CliResult r = run_cli("degenerate " + data_path("fan_coupled.json") + " --filtration " +
                              data_path("fan_filtration.json") + " --json");
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Json j = r.json();
  EXPECT_TRUE(j["result"]["conclusive"].get<bool>());
  EXPECT_LT(j["result"]["max_relative_deviation"].get<double>(), 1e-4);
  EXPECT_LT(j["result"]["det_balance_residual"].get<double>(), 1e-10);
}

TEST(Cli, RandomIsDeterministicAndValid) {
  const std::string args = "random --shape 'd:2;n:1,1;p:1,1' --seed 11";
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  ASSERT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.output, b.output);  // byte-identical

  const fs::path out = temp_file("random_datum.json");
  ASSERT_EQ(run_cli(args + " --out " + out.string()).exit_code, 0);
  EXPECT_EQ(run_cli("validate " + out.string()).exit_code, 0);
  fs::remove(out);
}

TEST(Cli, RandomGeometricMode) {
  const fs::path out = temp_file("random_geometric.json");
  ASSERT_EQ(
      run_cli("random --shape 'd:2;n:1,1;p:1,1' --seed 3 --geometric --out " + out.string())
          .exit_code,
      0);
  const CliResult r = run_cli("geometric " + out.string() + " --json");
  EXPECT_TRUE(r.json()["result"]["is_geometric"].get<bool>());
  fs::remove(out);
}

TEST(Cli, ReportsAreByteIdentical) {
  const std::string args = "capacity " + data_path("stretched_lines.json") + " --json --seed 5";
  EXPECT_EQ(run_cli(args).output, run_cli(args).output);
}

TEST(Cli, ConfigFileSuppliesDefaults) {
  const fs::path cfg = temp_file("config.json");
  std::ofstream(cfg) << R"({"tolerance": 1e-6, "max_iterations": 77})";
  const CliResult r = run_cli("capacity " + data_path("coord_lines.json") + " --json",
                              "QUIVERBL_CONFIG=" + cfg.string() + " ");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.json()["config"]["tolerance"].get<double>(), 1e-6);
  EXPECT_EQ(r.json()["config"]["max_iterations"].get<int>(), 77);

  // Explicit flags override the file.
  const CliResult o = run_cli("capacity " + data_path("coord_lines.json") + " --json --tol 1e-9",
                              "QUIVERBL_CONFIG=" + cfg.string() + " ");
  EXPECT_EQ(o.json()["config"]["tolerance"].get<double>(), 1e-9);
  fs::remove(cfg);
}

TEST(Cli, PerpViolationIsInputError) {
  const fs::path bad = temp_file("bad_perp.json");
  Json j = Json::parse(std::ifstream(data_path("coord_lines.json")));
  j["weights"] = {0.5, 0.5};
  std::ofstream(bad) << j.dump();
  const CliResult r = run_cli("capacity " + bad.string() + " --json");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_TRUE(r.json().contains("error"));
  fs::remove(bad);
}

}  // namespace
