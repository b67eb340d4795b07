// Copyright 2026 The Fusion Screen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the fusion command-line tool end to end in a scratch directory.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("fusion_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs the tool from the scratch directory and returns its exit code.
  int Run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" FUSION_CLI_PATH "' -q " + args +
                            " >cli.log 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Slurp(const fs::path& rel) const {
    std::ifstream in(dir_ / rel, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json ReadJson(const fs::path& rel) const { return json::parse(Slurp(rel)); }

  std::size_t CountLines(const fs::path& rel) const {
    std::ifstream in(dir_ / rel);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
  }

  fs::path dir_;
};

TEST_F(CliTest, GenIsByteReproducible) {
  const std::string args = "--count 60 --seed 5 --library-compounds 8 --targets t1,t2";
  ASSERT_EQ(Run("gen " + args + " --out a"), 0);
  ASSERT_EQ(Run("gen " + args + " --out b"), 0);
  for (const char* f : {"dataset.jsonl", "library.jsonl", "assay.csv", "inhibition.csv"}) {
    EXPECT_FALSE(Slurp(fs::path("a") / f).empty()) << f;
    EXPECT_EQ(Slurp(fs::path("a") / f), Slurp(fs::path("b") / f)) << f;
  }
  EXPECT_EQ(CountLines("a/library.jsonl"), 8u * 2u * 10u);
  EXPECT_EQ(CountLines("a/dataset.jsonl"), 61u);  // header plus one line per complex
  const json m = ReadJson("a/run_manifest.json");
  EXPECT_EQ(m.at("command"), "gen");
  EXPECT_EQ(m.at("status"), "complete");
  EXPECT_EQ(m.at("exit_code"), 0);
  EXPECT_EQ(m.at("config").at("--seed"), "5");
  EXPECT_EQ(m.at("outputs").size(), 4u);
}

TEST_F(CliTest, FullPipelineWritesComparisonAndReport) {
  ASSERT_EQ(Run("gen --count 500 --seed 3 --library-compounds 40 --targets protease1,spike1 "
                "--out gen"),
            0);
  ASSERT_EQ(Run("train --data gen/dataset.jsonl --mode coherent --seed 1 --out train"), 0);
  const json metrics = ReadJson("train/metrics.json");
  EXPECT_GT(metrics.at("validation").at("r2").get<double>(), 0.3);
  EXPECT_EQ(ReadJson("train/history.json").at("epochs").size(), 3u);

  ASSERT_EQ(Run("screen --model train/model.ckpt --library gen/library.jsonl --jobs 3 --ranks 2 "
                "--batch 16 --loaders 2 --out screen"),
            0);
  const json summary = ReadJson("screen/campaign/manifest.json").at("summary");
  EXPECT_EQ(summary.at("scored_poses"), 800);
  EXPECT_EQ(summary.at("missing_poses"), 0);

  ASSERT_EQ(Run("eval --predictions screen --experimental gen/assay.csv --positive-above 6 "
                "--correlation-min 0 --out eval"),
            0);
  const json report = ReadJson("eval/report.json");
  ASSERT_EQ(report.at("rows").size(), 4u);  // {fusion, vina} x {protease1, spike1}
  for (const json& row : report.at("rows")) {
    EXPECT_EQ(row.at("n"), 40);
    EXPECT_GT(row.at("pearson").get<double>(), 0.5) << row.dump();
  }
  EXPECT_EQ(CountLines("eval/best_poses.csv"), 81u);
  EXPECT_EQ(CountLines("eval/correlation.csv"), 5u);

  ASSERT_EQ(Run("report --runs gen train screen eval --out report"), 0);
  const std::string md = Slurp("report/report.md");
  EXPECT_NE(md.find("| RMSE | MAE | R2 | Pearson R | Spearman R |"), std::string::npos);
  EXPECT_NE(md.find("Compounds per hour"), std::string::npos);
  EXPECT_NE(md.find("| fusion | protease1 |"), std::string::npos);
}

TEST_F(CliTest, ScreenOutputIndependentOfParallelism) {
  ASSERT_EQ(Run("gen --count 0 --library-compounds 30 --targets t1 --out gen"), 0);
  const std::string base =
      "screen --synthetic-cost-ms 0 --library gen/library.jsonl --jobs 5 --ranks 3 --batch 7 ";
  ASSERT_EQ(Run(base + "--parallelism 1 --out s1"), 0);
  ASSERT_EQ(Run(base + "--parallelism 4 --loaders 1 --out s4"), 0);
  for (const auto& entry : fs::recursive_directory_iterator(dir_ / "s1" / "campaign")) {
    if (!entry.is_regular_file() || entry.path().filename() == "timings.json") continue;
    const fs::path rel = fs::relative(entry.path(), dir_ / "s1");
    EXPECT_EQ(Slurp(fs::path("s1") / rel), Slurp(fs::path("s4") / rel)) << rel;
  }
}

TEST_F(CliTest, ExhaustedRetriesExitWithMissingRanges) {
  ASSERT_EQ(Run("gen --count 0 --library-compounds 10 --targets t1 --out gen"), 0);
  std::ofstream(dir_ / "faults.json") << R"({"job_failure_rate": 1.0, "seed": 1})";
  EXPECT_EQ(Run("screen --synthetic-cost-ms 0 --library gen/library.jsonl --jobs 2 --ranks 2 "
                "--retries 1 --faults faults.json --out s"),
            3);
  EXPECT_EQ(ReadJson("s/campaign/missing_ranges.json").size(), 2u);
  const json m = ReadJson("s/run_manifest.json");
  EXPECT_EQ(m.at("status"), "incomplete");
  EXPECT_EQ(m.at("exit_code"), 3);
}

TEST_F(CliTest, UsageAndStageFailuresHaveDistinctCodes) {
  EXPECT_EQ(Run("train --out x"), 1);
  EXPECT_EQ(Run("no-such-command"), 1);
  ASSERT_EQ(Run("gen --count 40 --library-compounds 4 --targets t1 --out gen"), 0);
  EXPECT_EQ(Run("train --data gen/dataset.jsonl --mode mid --out mid"), 1);
  // A non-empty campaign directory is refused.
  fs::create_directories(dir_ / "s" / "campaign");
  std::ofstream(dir_ / "s" / "campaign" / "stale") << "x";
  EXPECT_EQ(Run("screen --synthetic-cost-ms 0 --library gen/library.jsonl --out s"), 2);
  const json m = ReadJson("s/run_manifest.json");
  EXPECT_EQ(m.at("status"), "failed");
  EXPECT_TRUE(m.contains("error"));
}

TEST_F(CliTest, QuadraticHpoWritesBestAndLog) {
  ASSERT_EQ(Run("hpo --objective quadratic --population 4 --budget 10 --interval 5 --seed 2 "
                "--out h"),
            0);
  const json best = ReadJson("h/best.json");
  EXPECT_TRUE(best.at("config").contains("optimizer.learning_rate"));
  EXPECT_GT(CountLines("h/hpo_log.jsonl"), 8u);
  EXPECT_TRUE(fs::exists(dir_ / "h" / "best_state.bin"));
}

TEST_F(CliTest, ConfigFileSuppliesSubcommandOptions) {
  std::ofstream(dir_ / "run.toml") << "[gen]\ncount = 30\nseed = 9\n";
  ASSERT_EQ(Run("--config run.toml gen --out g"), 0);
  EXPECT_EQ(CountLines("g/dataset.jsonl"), 31u);
  EXPECT_EQ(ReadJson("g/run_manifest.json").at("config").at("--seed"), "9");
}

}  // namespace
