// End-to-end tests of the command-line tool: file formats, exit codes and
// output determinism. The binary path arrives as argv[1] from CTest.

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

using nlohmann::json;

std::string g_cli_path;

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string command = g_cli_path + " " + args + " 2>/dev/null";
  std::array<char, 4096> buffer{};
  RunResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return result;
  std::size_t count = 0;
  while ((count = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
    result.output.append(buffer.data(), count);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string write_file(const std::string& name, const std::string& body) {
  const std::string path = testing::TempDir() + "/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

std::string example_system_path() {
  return write_file("cli_sys.json",
                    R"({"A": {"rows": 2, "cols": 2, "data": [[0.25, 0.5], [0.5, 1.0]]},
                        "C": {"rows": 1, "cols": 2,
                              "data": [[0.3333333333333333, 0.6666666666666666]]},
                        "name": "example"})");
}

std::string example_gain_path() {
  return write_file("cli_gain.json",
                    R"({"rows": 2, "cols": 1,
                        "data": [[0.3333333333333333], [0.6666666666666666]]})");
}

std::string contractive_system_path() {
  return write_file("cli_sys_stable.json",
                    R"({"A": {"rows": 2, "cols": 2, "data": [[0.45, 0.3], [0.15, 0.4]]},
                        "C": {"rows": 1, "cols": 2, "data": [[1.0, 0.5]]},
                        "name": "contractive"})");
}

TEST(CliAnalyze, Example1FeasibleWithKnownNorm) {
  const auto result = run_cli("analyze --system " + example_system_path() + " --gain " +
                              example_gain_path() + " --K 1 --alpha 0");
  ASSERT_EQ(result.exit_code, 0);
  const json out = json::parse(result.output);
  EXPECT_TRUE(out["feasibility"]["feasible"].get<bool>());
  EXPECT_NEAR(out["feasibility"]["N"].get<double>(), 0.694444, 1e-6);
  EXPECT_NEAR(out["sensitivity"]["l2_bound_squared"].get<double>(), 720.0 / 671.0, 1e-9);
  EXPECT_NEAR(out["sensitivity"]["l1_bound"].get<double>(), 6.0, 1e-9);
}

TEST(CliAnalyze, ZeroGainUnstableExitsTwo) {
  const std::string zero_gain =
      write_file("cli_gain_zero.json", R"({"rows": 2, "cols": 1, "data": [[0], [0]]})");
  const auto result = run_cli("analyze --system " + example_system_path() + " --gain " +
                              zero_gain + " --K 1 --alpha 0");
  EXPECT_EQ(result.exit_code, 2);
  const json out = json::parse(result.output);
  EXPECT_FALSE(out["feasibility"]["contraction"].get<bool>());
  EXPECT_TRUE(out["sensitivity"].is_null());
}

TEST(CliAnalyze, AlphaOneIsDomainError) {
  const auto result = run_cli("analyze --system " + example_system_path() + " --gain " +
                              example_gain_path() + " --K 1 --alpha 1");
  EXPECT_EQ(result.exit_code, 1);
}

TEST(CliAnalyze, MalformedInputsExitOne) {
  const std::string bad = write_file("cli_bad.json", "{broken");
  EXPECT_EQ(run_cli("analyze --system " + bad + " --gain " + example_gain_path()).exit_code, 1);
  const std::string ragged = write_file(
      "cli_ragged.json", R"({"rows": 2, "cols": 1, "data": [[0.1], [0.2, 0.3]]})");
  EXPECT_EQ(run_cli("analyze --system " + example_system_path() + " --gain " + ragged).exit_code,
            1);
  EXPECT_EQ(run_cli("analyze --system /does/not/exist.json --gain " + example_gain_path())
                .exit_code,
            1);
}

TEST(CliDesign, PrintsEtaMaxAndIsDeterministic) {
  const std::string args =
      "design --system " + example_system_path() + " --K 0.5 --alpha 0.2 --seed 17";
  const auto first = run_cli(args);
  ASSERT_EQ(first.exit_code, 0);
  const json out = json::parse(first.output);
  EXPECT_NEAR(out["eta_max"].get<double>(), 1.67705, 1e-4);
  EXPECT_EQ(out["status"], "optimal-grid");

  const auto second = run_cli(args);
  EXPECT_EQ(first.output, second.output);  // byte-identical under a fixed seed
}

TEST(CliDesign, ContractivePlantReturnsZeroGain) {
  const auto result = run_cli("design --system " + contractive_system_path() +
                              " --K 1 --alpha 0.2");
  ASSERT_EQ(result.exit_code, 0);
  const json out = json::parse(result.output);
  EXPECT_DOUBLE_EQ(out["bound_squared"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(out["L"]["data"][0][0].get<double>(), 0.0);
}

TEST(CliDesign, InfeasibleSystemExitsTwo) {
  const std::string path = write_file(
      "cli_sys_infeasible.json",
      R"({"A": {"rows": 2, "cols": 2, "data": [[1.2, 0.0], [0.0, 0.5]]},
          "C": {"rows": 1, "cols": 2, "data": [[0.0, 1.0]]}})");
  const auto result = run_cli("design --system " + path + " --K 1 --alpha 0");
  EXPECT_EQ(result.exit_code, 2);
}

TEST(CliDesign, FixPerformanceMode) {
  const auto result = run_cli("design --system " + example_system_path() +
                              " --K 0.5 --alpha 0.2 --fix-performance 0.455125");
  ASSERT_EQ(result.exit_code, 0);
  const json out = json::parse(result.output);
  EXPECT_NEAR(out["L"]["data"][0][0].get<double>(), 0.47692, 5e-4);
  EXPECT_NEAR(out["L"]["data"][1][0].get<double>(), 0.95385, 5e-4);
}

TEST(CliCalibrate, PrintsTheContractFields) {
  const auto result = run_cli("calibrate --epsilon 0.5 --delta 0.5 --delta-G 2");
  ASSERT_EQ(result.exit_code, 0);
  const json out = json::parse(result.output);
  EXPECT_DOUBLE_EQ(out["kappa"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(out["sigma"].get<double>(), 2.0);
  EXPECT_DOUBLE_EQ(out["epsilon"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(out["delta"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(out["delta_G"].get<double>(), 2.0);
  EXPECT_EQ(run_cli("calibrate --epsilon 1 --delta 0.7 --delta-G 1").exit_code, 1);
}

TEST(CliEmpirical, TightOnExample1) {
  const auto result = run_cli("empirical --system " + example_system_path() + " --gain " +
                              example_gain_path() +
                              " --K 1 --alpha 0.5 --horizon 400 --trials 4 --seed 5");
  ASSERT_EQ(result.exit_code, 0);
  const json out = json::parse(result.output);
  const double ratio = out["ratio"].get<double>();
  EXPECT_GE(ratio, 0.995);
  EXPECT_LE(ratio, 1.0 + 1e-6);
}

TEST(CliSimulate, WritesCsvWithContractColumns) {
  const std::string csv = testing::TempDir() + "/cli_sim.csv";
  const auto result = run_cli("simulate --system " + example_system_path() + " --gain " +
                              example_gain_path() +
                              " --x0 1,0 --steps 40 --sigma 0.2 --seed 9 --csv " + csv);
  ASSERT_EQ(result.exit_code, 0);
  std::ifstream in(csv);
  ASSERT_TRUE(in.good());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "step,x_1,x_2,z_1,z_2,zhat_1,zhat_2");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 40);
}

TEST(CliPipeline, SigmaMatchesKappaTimesBound) {
  const std::string csv = testing::TempDir() + "/cli_pipe.csv";
  const auto result = run_cli("pipeline --system " + example_system_path() +
                              " --K 0.5 --alpha 0.2 --epsilon 1 --delta 0.05" +
                              " --x0 1,0 --steps 60 --seed 21 --csv " + csv);
  ASSERT_EQ(result.exit_code, 0);
  const json out = json::parse(result.output);
  const double kappa = out["calibration"]["kappa"].get<double>();
  const double sigma = out["calibration"]["sigma"].get<double>();
  const double bound_sq = out["design"]["bound_squared"].get<double>();
  EXPECT_NEAR(sigma, kappa * std::sqrt(bound_sq), 1e-12 * std::max(1.0, sigma));

  std::ifstream in(csv);
  int rows = -1;  // discount the header
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 60);
}

TEST(CliPipeline, NoiseFreeObserverConvergesOnContractivePlant) {
  const std::string csv = testing::TempDir() + "/cli_pipe_stable.csv";
  const auto result = run_cli("pipeline --system " + contractive_system_path() +
                              " --K 1 --alpha 0.2 --epsilon 1 --delta 0.05" +
                              " --x0 1,1 --steps 200 --seed 2 --csv " + csv);
  ASSERT_EQ(result.exit_code, 0);
  const json out = json::parse(result.output);
  EXPECT_LT(out["simulation"]["final_error_noise_free"].get<double>(), 1e-6);
}

TEST(CliGeneral, UnknownFlagsRejected) {
  EXPECT_EQ(run_cli("design --bogus 1").exit_code, 1);
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("--help").exit_code, 0);
}

}  // namespace

int main(int argc, char** argv) {
  testing::InitGoogleTest(&argc, argv);
  if (argc < 2) {
    fprintf(stderr, "usage: cli_test <path-to-dpobs-binary>\n");
    return 2;
  }
  g_cli_path = argv[1];
  return RUN_ALL_TESTS();
}
