/* Copyright (c) 2026 The edgecl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "edgecl.hpp"

namespace {

using namespace edgecl;
namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
Result cli(const std::string& args) {
  const std::string cmd = std::string(EDGECL_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("edgecl_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    RunConfig cfg = default_run_config();
    cfg.stream.image_size = 8;
    cfg.stream.frames_per_experience = 5;
    cfg.stream.new_classes = 2;
    cfg.stream.objects_per_class = 1;
    cfg.stream.sessions_per_object = 3;
    cfg.stream.train_sessions = 2;
    cfg.pretrain.epochs = 2;
    for (auto& s : cfg.strategies) {
      s.epochs = 1;
      s.buffer_capacity = s.kind == StrategyKind::naive ? 0 : 12;
    }
    cfg.seeds = {1};
    cfg.output_dir = (dir_ / "default-out").string();
    std::ofstream(dir_ / "cfg.json") << nlohmann::json(cfg).dump(2);
    config_ = (dir_ / "cfg.json").string();
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
  std::string config_;
};

TEST_F(CliTest, GenWritesStreamDirectory) {
  const auto r = cli("gen -c " + config_ + " -o " + (dir_ / "gen").string() + " --seed 3");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("wrote 4 experiences"), std::string::npos) << r.out;
  nlohmann::json spec;
  std::ifstream(dir_ / "gen" / "spec.json") >> spec;
  EXPECT_EQ(spec.at("seed"), 3);
  EXPECT_TRUE(fs::exists(dir_ / "gen" / "experiences" / "exp_0003.bin"));
}

TEST_F(CliTest, RunWithSeedAndStrategySelection) {
  const auto out = dir_ / "run";
  const auto r = cli("run -c " + config_ + " -o " + out.string() + " -s 1-2 --strategy ar1-pool --strategy naive-input");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("ar1-pool: initial"), std::string::npos);
  std::ifstream is(out / "metrics.csv");
  std::size_t lines = 0;
  for (std::string l; std::getline(is, l);) ++lines;
  EXPECT_EQ(lines, 1u + 2 * 2 * 4);
  nlohmann::json summary;
  std::ifstream(out / "summary.json") >> summary;
  EXPECT_EQ(summary.at("seeds"), (std::vector<int>{1, 2}));
}

TEST_F(CliTest, ProfilePrintsTable) {
  const auto r = cli("profile -c " + config_ + " -o " + (dir_ / "prof").string() +
                     " --strategy ar1-pool --strategy ar1-conv2 --strategy ar1-input");
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* row : {"Variant", "Feature extraction", "Weights update", "Overall"})
    EXPECT_NE(r.out.find(row), std::string::npos) << row;
  EXPECT_TRUE(fs::exists(dir_ / "prof" / "timing.csv"));
}

TEST_F(CliTest, CompareReportsChecks) {
  const auto r = cli("compare -c " + config_ + " -o " + (dir_ / "cmp").string());
  // 0 when every ordering holds, 3 when one is violated.
  EXPECT_TRUE(r.code == 0 || r.code == 3) << r.out;
  EXPECT_NE(r.out.find("ar1-pool >= replay-balanced-pool"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "compare.json"));
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "compare.csv"));
}

TEST_F(CliTest, ConfigPrintsLoadableDefaults) {
  const auto r = cli("config");
  ASSERT_EQ(r.code, 0) << r.out;
  std::ofstream(dir_ / "defaults.json") << r.out;
  const RunConfig back = load_run_config((dir_ / "defaults.json").string());
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(default_run_config()));
}

TEST_F(CliTest, ErrorsExitNonZero) {
  EXPECT_NE(cli("").code, 0);
  auto r = cli("run -c " + config_ + " --strategy no-such-thing");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("no strategy labelled"), std::string::npos) << r.out;
  EXPECT_EQ(cli("run -c " + config_ + " -s 5-2").code, 1);
  EXPECT_EQ(cli("run -c " + (dir_ / "missing.json").string()).code, 1);
  std::ofstream(dir_ / "file") << "x";
  r = cli("run -c " + config_ + " -o " + (dir_ / "file" / "sub").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("cannot create output directory"), std::string::npos) << r.out;
  EXPECT_EQ(cli("profile -c " + config_ + " --strategy ar1-pool").code, 1);
}

}  // namespace
