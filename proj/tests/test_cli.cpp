/*
 * Copyright 2026 The hibd Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// Runs the hibd executable end to end.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Invocation {
  int code = -1;
  std::string out;
};

Invocation hibd(const std::string& args) {
  const std::string cmd = std::string(HIBD_CLI_PATH) + " " + args + " 2>/dev/null";
  Invocation r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("hibd_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Cli, Version) {
  const Invocation r = hibd("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("0.1.0"), std::string::npos);
}

TEST_F(Cli, DeconvolveRecoversGenerousInstance) {
  const Invocation r = hibd("deconvolve --mu 64 --n 8 --s 2 --sigma 2 --seed 3 --out " + path("d.json"));
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(slurp(path("d.json")));
  EXPECT_TRUE(j["result"]["success"].get<bool>());
  EXPECT_LT(j["result"]["rel_error"].get<double>(), 1e-6);
  EXPECT_EQ(j["meta"]["base_seed"].get<std::uint64_t>(), 3u);
  EXPECT_EQ(j["meta"]["version"], "0.1.0");
  EXPECT_EQ(j["result"]["support"], j["result"]["truth_support"]);
}

TEST_F(Cli, DeconvolveFailureExitCode) {
  const Invocation r = hibd("deconvolve --mu 8 --n 8 --s 4 --sigma 4 --seed 1 --max-outer-iters 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(json::parse(r.out)["result"]["success"].get<bool>());
}

TEST_F(Cli, UsageErrorsWriteNothing) {
  EXPECT_EQ(hibd("deconvolve --mu 64 --n 8 --s 2 --out " + path("x.json")).code, 1);
  EXPECT_FALSE(fs::exists(path("x.json")));
  EXPECT_EQ(hibd("deconvolve --mu 16 --n 8 --s 40 --sigma 2 --out " + path("x.json")).code, 1);
  EXPECT_FALSE(fs::exists(path("x.json")));
  EXPECT_EQ(hibd("deconvolve --mu 16 --n 8 --s 1 --sigma 2 --u-kind cauchy").code, 1);
  EXPECT_EQ(hibd("deconvolve --mu sixteen --n 8 --s 1 --sigma 2").code, 1);
  EXPECT_EQ(hibd("frobnicate").code, 1);
  EXPECT_EQ(hibd("").code, 1);
}

TEST_F(Cli, DumpConfigRoundTrip) {
  const Invocation first = hibd("demix --users 6 --active 2 --rows 5 --mu 20 --n 6 --s 1 --sigma 2 --cg-tol 1e-5 --dump-config");
  ASSERT_EQ(first.code, 0);
  std::ofstream(path("c.json")) << first.out;
  const Invocation second = hibd("demix --config " + path("c.json") + " --dump-config");
  ASSERT_EQ(second.code, 0);
  EXPECT_EQ(first.out, second.out);
  EXPECT_EQ(json::parse(first.out)["solver"]["cg_tol"].get<double>(), 1e-5);
  // Flags override the file.
  const json over = json::parse(hibd("demix --config " + path("c.json") + " --mu 24 --dump-config").out);
  EXPECT_EQ(over["mu"].get<int>(), 24);
}

TEST_F(Cli, ConfigFileValidation) {
  std::ofstream(path("unknown.json")) << R"({"mu": 16, "bogus": 1})";
  EXPECT_EQ(hibd("deconvolve --config " + path("unknown.json")).code, 1);
  std::ofstream(path("nested.json")) << R"({"solver": {"cg_tolerance": 1e-3}})";
  EXPECT_EQ(hibd("deconvolve --mu 16 --n 4 --s 1 --sigma 1 --config " + path("nested.json")).code, 1);
  std::ofstream(path("type.json")) << R"({"mu": "sixteen"})";
  EXPECT_EQ(hibd("deconvolve --n 4 --s 1 --sigma 1 --config " + path("type.json")).code, 1);
  std::ofstream(path("cmd.json")) << R"({"command": "phase"})";
  EXPECT_EQ(hibd("deconvolve --mu 16 --n 4 --s 1 --sigma 1 --config " + path("cmd.json")).code, 1);
  EXPECT_EQ(hibd("deconvolve --config " + path("missing.json")).code, 1);
}

TEST_F(Cli, PhaseThenFit) {
  ASSERT_EQ(hibd("phase --n-values 8 --sigma-values 2 --s-values 1,2 --mu-values 12,24 --trials 5 --seed 4 --out " +
                 path("p.csv"))
                .code,
            0);
  const std::string csv = slurp(path("p.csv"));
  EXPECT_NE(csv.find("# base_seed 4\n"), std::string::npos);
  EXPECT_NE(csv.find("n,mu,s,sigma,trials,successes,prob,mean_iters,mean_ms\n"), std::string::npos);
  std::size_t data_rows = 0;
  std::istringstream lines(csv.substr(csv.find("n,mu,")));
  for (std::string line; std::getline(lines, line);) data_rows += line.empty() ? 0 : 1;
  EXPECT_EQ(data_rows, 5u);  // header plus four grid points

  ASSERT_EQ(hibd("fit --table " + path("p.csv") + " --plot-prefix " + path("plot") + " --out " + path("f.json")).code,
            0);
  const json f = json::parse(slurp(path("f.json")));
  ASSERT_EQ(f["fits"].size(), 2u);
  EXPECT_EQ(f["fits"][0]["a"].get<double>(), 1.0);
  EXPECT_EQ(f["fits"][1]["a"].get<double>(), 2.0);
  for (const auto& fit : f["fits"]) EXPECT_GE(fit["loss"].get<double>(), 0.0);
  EXPECT_EQ(f["meta"]["base_seed"].get<std::uint64_t>(), 4u);
  EXPECT_TRUE(fs::exists(path("plot_a1.csv")));
  EXPECT_TRUE(fs::exists(path("plot_a2.csv")));
}

TEST_F(Cli, SinglePointPhase) {
  const Invocation r = hibd("phase --n-values 8 --sigma-values 1 --s-values 1 --mu-values 32 --trials 5 --seed 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\n8,32,1,1,5,"), std::string::npos);
  EXPECT_EQ(hibd("phase --n-values 8 --sigma-values 1 --s-values 1 --mu-values 32 --trials 0").code, 1);
}

TEST_F(Cli, PhaseIsThreadCountInvariant) {
  const std::string args =
      "phase --n-values 8 --sigma-values 2 --s-values 1,2 --mu-values 10,20,30 --trials 4 --seed 9 --no-timing";
  const Invocation one = hibd(args + " --threads 1");
  const Invocation four = hibd(args + " --threads 4");
  ASSERT_EQ(one.code, 0);
  EXPECT_EQ(one.out, four.out);
  const Invocation d1 = hibd("deconvolve --mu 48 --n 8 --s 2 --sigma 2 --seed 5 --threads 1");
  const Invocation d4 = hibd("deconvolve --mu 48 --n 8 --s 2 --sigma 2 --seed 5 --threads 4");
  EXPECT_EQ(d1.out, d4.out);
}

TEST_F(Cli, RipcheckExactDominatesMonteCarlo) {
  const Invocation r = hibd("ripcheck --mu 6 --n 3 --s 2 --sigma 2 --trials 300 --exact --factorization --seed 8");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  ASSERT_FALSE(j["exact"].is_null());
  EXPECT_GE(j["exact"].get<double>() + 1e-12, j["delta_lower"].get<double>());
  EXPECT_TRUE(j["factorization"]["holds"].get<bool>());
  EXPECT_EQ(hibd("ripcheck --mu 40 --n 40 --s 6 --sigma 6 --trials 5 --exact --guard 100").code, 1);
}

TEST_F(Cli, DemixReportsPerUserErrors) {
  const Invocation r = hibd("demix --users 4 --active 1 --rows 8 --mu 96 --n 8 --s 1 --sigma 1 --seed 3");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["result"]["success"].get<bool>());
  EXPECT_EQ(j["result"]["user_errors"].size(), 1u);
}

}  // namespace
