#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "chainbound/chain.hpp"
#include "chainbound/chaining.hpp"
#include "chainbound/text_io.hpp"
#include "test_support.hpp"

using namespace chainbound;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(CHAINBOUND_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  testing_support::TempDir dir;

  std::string kernel_file(const Eigen::MatrixXd& a, const std::string& name = "k.txt") {
    return dir.write(name, format_kernel_matrix(a)).string();
  }
};

}  // namespace

TEST_F(Cli, SpectrumOfRankOneKernel) {
  Eigen::MatrixXd a(2, 2);
  a << 0.2, 0.8, 0.2, 0.8;
  const auto r = run("spectrum --kernel " + kernel_file(a));
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["lambda"].get<double>(), 0.0, 1e-12);
  EXPECT_EQ(j["tau"], 1);
  EXPECT_NEAR(j["mu"][1].get<double>(), 0.8, 1e-12);
}

TEST_F(Cli, SpectrumRejectsBadKernel) {
  const auto bad = dir.write("bad.txt", "2\n0.5 0.6\n0.5 0.5\n");
  EXPECT_EQ(run("spectrum --kernel " + bad.string()).code, 2);
  EXPECT_EQ(run("spectrum --kernel " + (dir.path() / "missing").string()).code, 2);
}

TEST_F(Cli, SpectrumOfPeriodicKernelHasNoTau) {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 1, 0;
  const auto r = run("spectrum --kernel " + kernel_file(a));
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["tau"].is_null());
  EXPECT_NEAR(j["lambda"].get<double>(), 1.0, 1e-12);
}

TEST_F(Cli, SampleMatchesLibrary) {
  const auto a = chain_matrix(ChainSpec::cycle(5));
  const auto r = run("sample --kernel " + kernel_file(a) + " --n 20 --seed 7");
  ASSERT_EQ(r.code, 0);
  const auto expected = sample_trajectory(TransitionKernel::from_matrix(a), 20, 7);
  std::string text;
  for (auto v : expected) text += std::to_string(v) + "\n";
  EXPECT_EQ(r.out, text);
}

TEST_F(Cli, BoundsPaulinAtZero) {
  const auto r = run("bounds --name paulin --u 0 --sigma2 1 --M 1 --lambda 0.5");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["value"], 2.0);
  EXPECT_EQ(j["name"], "paulin");
  EXPECT_EQ(j["params"]["C_main"], 1.0);
}

TEST_F(Cli, BoundsErrorsAndGrid) {
  EXPECT_EQ(run("bounds --name paulin --lambda 1").code, 2);
  EXPECT_EQ(run("bounds --name paulin --frobnicate 3").code, 2);
  EXPECT_EQ(run("bounds --name nope").code, 2);
  EXPECT_EQ(run("").code, 2);
  const auto r = run("bounds --name main_tail --name nsw --u-grid 0.1:10:5 --probability");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "name,u,value,exponent,clipped");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 11);
  const auto all = run("bounds --name all --u 1 --tau 2 --n 4 --k 4 --d 2");
  ASSERT_EQ(all.code, 0);
  EXPECT_EQ(nlohmann::json::parse(all.out).size(), 8u);
}

TEST_F(Cli, GammaOnTwoPointWitness) {
  Table pts = Table::Zero(2, 2);
  pts.row(1) << 3.0, 1.0;
  const auto t = witness_from_points(1, 2, pts);
  const auto path = dir.write("w.txt", format_witness_file(t));
  const auto r = run("gamma --witness " + path.string());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  // Uniform mu: sqrt(0.5 * 9 + 0.5 * 1).
  EXPECT_NEAR(j["gamma2"]["value"].get<double>(), std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(j["gamma1"]["value"].get<double>(), 3.0, 1e-12);
  EXPECT_EQ(j["gamma2"]["sequence"]["levels"][0].size(), 1u);
  const auto scaled = run("gamma --witness " + path.string() + " --metric scaled --lambda 0.5");
  ASSERT_EQ(scaled.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(scaled.out)["gamma1"]["value"].get<double>(), 240.0, 1e-9);
  EXPECT_EQ(run("gamma --witness " + path.string() + " --metric scaled --lambda 1").code, 2);
}

TEST_F(Cli, EstimateL) {
  Table t(3, 1);
  t << -1, 0, 1;
  const auto f = make_step_functions(NormedSpace::linf(1), 1, 3, t);
  const auto path = dir.write("f.txt", format_step_functions(f));
  const auto r = run("estimate-l --functions " + path.string() + " --trials 20000 --seed 3");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  const double expected = oracle::half_normal_mean(std::sqrt(2.0 / 3.0));
  EXPECT_NEAR(j["L"]["mean"].get<double>(), expected, 3 * j["L"]["std_error"].get<double>());
  EXPECT_NEAR(j["sigma2_scalar"].get<double>(), 2.0 / 3.0, 1e-15);
}

TEST_F(Cli, ExperimentWritesReportsAtomically) {
  const auto cfg = dir.write("e.ini",
                             "[experiment]\nname = cli_run\nn_sweep = 4, 8\ntrials = 100\n"
                             "l_trials = 20\n\n[chain]\nkind = cycle\nsize = 4\n");
  const auto out = dir.path() / "out";
  const auto r = run("experiment --config " + cfg.string() + " --output-dir " + out.string());
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(std::filesystem::exists(out / "cli_run.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "cli_run.json"));

  const auto bad = dir.write("bad.ini", "[experiment]\nname = bad_run\ntrials = 5\n");
  const auto out2 = dir.path() / "out2";
  EXPECT_EQ(run("experiment --config " + bad.string() + " --output-dir " + out2.string()).code, 2);
  EXPECT_FALSE(std::filesystem::exists(out2 / "bad_run.csv"));
}

TEST_F(Cli, OutputFlagWritesFile) {
  const auto target = dir.path() / "bounds.json";
  const auto r = run("--output " + target.string() + " bounds --name main_expectation --k 4 --lambda 0.75 --L 10");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NEAR(nlohmann::json::parse(io::read_file(target))["value"].get<double>(), 36.0, 1e-12);
}
