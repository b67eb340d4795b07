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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "fusion/screen/campaign.h"
#include "fusion/screen/job.h"
#include "fusion/screen/library.h"
#include "fusion/screen/report.h"
#include "fusion/screen/scorer.h"
#include "gtest/gtest.h"
#include "support/toy.h"

namespace fusion::screen {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class ScreenTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("fusion_screen_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::vector<PoseKey> Keys(const std::vector<PoseRecord>& library) {
  std::vector<PoseKey> keys;
  for (const PoseRecord& r : library) keys.push_back(r.key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<PoseKey> Keys(const std::vector<PredictionRecord>& records) {
  std::vector<PoseKey> keys;
  for (const PredictionRecord& r : records) keys.push_back(r.key());
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<PoseKey> Keys(const std::vector<PoseError>& errors) {
  std::vector<PoseKey> keys;
  for (const PoseError& e : errors) keys.push_back(e.key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::size_t CountEntries(const fs::path& dir) {
  if (!fs::exists(dir)) return 0;
  return static_cast<std::size_t>(
      std::distance(fs::directory_iterator(dir), fs::directory_iterator()));
}

TEST(PartitionTest, HundredPosesSixteenRanks) {
  const auto jobs = Partition(100, 1, 16);
  ASSERT_EQ(jobs.size(), 1u);
  std::map<std::size_t, int> sizes;
  for (const PoseRange& r : jobs[0].rank_ranges) ++sizes[r.size()];
  EXPECT_EQ(sizes, (std::map<std::size_t, int>{{6, 12}, {7, 4}}));
}

TEST(PartitionTest, TwoMillionPosesFormOneJob) {
  const auto jobs = Partition(2'000'000, 1, 16);
  ASSERT_EQ(jobs.size(), 1u);
  EXPECT_EQ(jobs[0].poses, (PoseRange{0, 2'000'000}));
  for (const PoseRange& r : jobs[0].rank_ranges) EXPECT_EQ(r.size(), 125'000u);
}

TEST(PartitionTest, RandomLibrariesAreCoveredExactlyOnce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 5000;
    const int jobs_n = 1 + static_cast<int>(rng() % 20);
    const int ranks = 1 + static_cast<int>(rng() % 24);
    std::vector<int> owner(n, 0);
    for (const JobSpec& job : Partition(n, jobs_n, ranks)) {
      std::size_t lo = n, hi = 0;
      for (const PoseRange& r : job.rank_ranges) {
        lo = std::min(lo, r.size());
        hi = std::max(hi, r.size());
        for (std::size_t i = r.begin; i < r.end; ++i) ++owner[i];
      }
      EXPECT_LE(hi - lo, 1u);
    }
    EXPECT_TRUE(std::all_of(owner.begin(), owner.end(), [](int c) { return c == 1; }));
  }
}

TEST(PartitionTest, RejectsBadInput) {
  EXPECT_THROW(Partition(0, 1, 16), std::invalid_argument);
  EXPECT_THROW(Partition(10, 0, 16), std::invalid_argument);
  EXPECT_THROW(Partition(10, 1, 0), std::invalid_argument);
}

TEST(LibraryTest, GenerateValidateAndRoundTrip) {
  const auto lib = GenerateLibrary(5, {"protease1", "spike1"}, 10, 3);
  EXPECT_EQ(lib.size(), 100u);
  EXPECT_EQ(MeanPosesPerCompound(lib), 20.0);
  ValidateLibrary(lib);
  const fs::path path = fs::temp_directory_path() / "fusion_screen_library.jsonl";
  WriteLibrary(path, lib);
  EXPECT_EQ(ReadLibrary(path), lib);
  fs::remove(path);
}

TEST(LibraryTest, RejectsDuplicatesAndBadPoseIds) {
  auto lib = GenerateLibrary(2, {"t"}, 3, 1);
  lib.push_back(lib.front());
  EXPECT_THROW(ValidateLibrary(lib), std::invalid_argument);
  lib.pop_back();
  lib.push_back({{"C9", "t", 10}, 1});
  EXPECT_THROW(ValidateLibrary(lib), std::invalid_argument);
  EXPECT_THROW(GenerateLibrary(2, {"t"}, 11, 1), std::invalid_argument);
}

TEST(FaultPlanTest, CorruptionRateIsHonoured) {
  FaultPlan f;
  f.record_corruption_rate = 0.1;
  f.seed = 4;
  const auto lib = GenerateLibrary(2000, {"t"}, 10, 1);
  std::size_t corrupt = 0;
  for (const PoseRecord& r : lib) corrupt += f.CorruptRecord(r.key);
  EXPECT_NEAR(static_cast<double>(corrupt) / lib.size(), 0.1, 0.01);
  f.record_corruption_rate = 1.2;
  EXPECT_THROW(f.Validate(), std::invalid_argument);
}

TEST_F(ScreenTest, NoFaultsScoresEveryPoseOnce) {
  const auto lib = GenerateLibrary(37, {"protease1", "spike2"}, 7, 5);
  const auto spec = Partition(lib.size(), 1, 5, 8, 3)[0];
  SyntheticScorer scorer;
  JobOptions options;
  options.out_dir = dir_;
  fs::create_directories(dir_);
  const JobResult r = RunJob(spec, lib, scorer, FaultPlan{}, 0, options);
  ASSERT_EQ(r.status, JobStatus::kCompleted) << r.failure;
  EXPECT_EQ(Keys(r.records), Keys(lib));
  EXPECT_TRUE(r.errors.empty());
  for (const PredictionRecord& p : r.records) {
    EXPECT_EQ(p.predicted_pk, SyntheticScorer::Prediction(p.key()));
    const PoseRange& own = spec.rank_ranges[static_cast<std::size_t>(p.rank_id)];
    const auto it = std::find_if(lib.begin(), lib.end(),
                                 [&](const PoseRecord& x) { return x.key == p.key(); });
    const auto idx = static_cast<std::size_t>(it - lib.begin());
    EXPECT_TRUE(idx >= own.begin && idx < own.end);
  }
  // Shards hold whole compounds and together equal the records.
  std::vector<PredictionRecord> on_disk;
  std::map<std::string, std::set<std::string>> compound_shards;
  for (const auto& entry : fs::directory_iterator(r.output_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("shard-", 0) != 0) continue;
    std::ifstream in(entry.path());
    for (std::string line; std::getline(in, line);) {
      on_disk.push_back(PredictionRecordFromJson(json::parse(line)));
      compound_shards[on_disk.back().compound_id].insert(name);
    }
  }
  EXPECT_EQ(Keys(on_disk), Keys(lib));
  for (const auto& [compound, shards] : compound_shards) EXPECT_EQ(shards.size(), 1u) << compound;
}

TEST_F(ScreenTest, FullCorruptionCompletesWithEmptyOutput) {
  const auto lib = GenerateLibrary(10, {"t"}, 10, 5);
  FaultPlan f;
  f.record_corruption_rate = 1.0;
  SyntheticScorer scorer;
  const JobResult r = RunJob(Partition(lib.size(), 1, 4, 7, 2)[0], lib, scorer, f, 0, {});
  EXPECT_EQ(r.status, JobStatus::kCompleted);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(Keys(r.errors), Keys(lib));
}

TEST_F(ScreenTest, RankFailureLeavesNoFiles) {
  const auto lib = GenerateLibrary(20, {"t"}, 10, 5);
  FaultPlan f;
  f.rank_failure_rate = 1.0;
  SyntheticScorer scorer;
  fs::create_directories(dir_);
  JobOptions options;
  options.out_dir = dir_;
  const JobResult r = RunJob(Partition(lib.size(), 1, 4, 7, 2)[0], lib, scorer, f, 0, options);
  EXPECT_EQ(r.status, JobStatus::kFailed);
  EXPECT_NE(r.failure.find("node failure"), std::string::npos) << r.failure;
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(CountEntries(dir_), 0u);
}

TEST_F(ScreenTest, WriteFailureLeavesNoFiles) {
  const auto lib = GenerateLibrary(20, {"t"}, 10, 5);
  FaultPlan f;
  f.job_failure_rate = 1.0;
  SyntheticScorer scorer;
  fs::create_directories(dir_);
  JobOptions options;
  options.out_dir = dir_;
  const JobResult r = RunJob(Partition(lib.size(), 1, 4, 7, 2)[0], lib, scorer, f, 0, options);
  EXPECT_EQ(r.status, JobStatus::kFailed);
  EXPECT_EQ(CountEntries(dir_), 0u);
}

TEST_F(ScreenTest, LoaderCountDoesNotChangeModelPredictions) {
  const models::FusionModel model(fusion::testing::ToyConfig(models::ModelMode::kCoherent), 3);
  data::GenerationParams gen;
  const ModelScorer scorer(&model, gen, fusion::testing::ToyFeaturizer());
  const auto lib = GenerateLibrary(6, {"t"}, 10, 9);
  FaultPlan f;
  f.record_corruption_rate = 0.05;
  const JobResult one = RunJob(Partition(lib.size(), 1, 3, 7, 1)[0], lib, scorer, f, 0, {});
  const JobResult many = RunJob(Partition(lib.size(), 1, 3, 7, 12)[0], lib, scorer, f, 0, {});
  ASSERT_EQ(one.status, JobStatus::kCompleted);
  EXPECT_EQ(one.records, many.records);
  EXPECT_EQ(one.errors, many.errors);
  EXPECT_EQ(one.records.size() + one.errors.size(), lib.size());
  // Each prediction matches scoring the pose on its own.
  for (const PredictionRecord& p : one.records) {
    const auto it = std::find_if(lib.begin(), lib.end(),
                                 [&](const PoseRecord& x) { return x.key == p.key(); });
    const LoadedPose loaded = scorer.Load(*it);
    EXPECT_NEAR(p.predicted_pk, model.PredictOne(*loaded.item), 1e-10);
  }
}

TEST_F(ScreenTest, ParallelismDoesNotChangeOutput) {
  const auto lib = GenerateLibrary(300, {"protease1", "protease2"}, 5, 2);
  FaultPlan f;
  f.record_corruption_rate = 0.01;
  f.job_failure_rate = 0.2;
  f.rank_failure_rate = 0.2;
  f.seed = 12;
  SyntheticScorer scorer;
  CampaignConfig c;
  c.n_jobs = 10;
  c.ranks_per_job = 4;
  c.batch_size = 12;
  c.loaders_per_rank = 3;
  c.max_retries = 10;
  c.parallelism = 1;
  const CampaignResult serial = RunCampaign(lib, c, scorer, f);
  c.parallelism = 8;
  const CampaignResult parallel = RunCampaign(lib, c, scorer, f);
  EXPECT_EQ(serial.records, parallel.records);
  EXPECT_EQ(serial.errors, parallel.errors);
  EXPECT_TRUE(serial.missing.empty());
  EXPECT_GT(serial.report.failed_attempts, 0);
}

TEST_F(ScreenTest, CampaignWithRetriesIsCompleteOverSeeds) {
  const auto lib = GenerateLibrary(200, {"spike1"}, 10, 8);
  SyntheticScorer scorer;
  CampaignConfig c;
  c.n_jobs = 10;
  c.ranks_per_job = 4;
  c.loaders_per_rank = 2;
  c.parallelism = 3;
  int failed_attempts = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    FaultPlan f;
    f.job_failure_rate = 0.03;
    f.seed = seed;
    c.out_dir = dir_ / std::to_string(seed);
    const CampaignResult r = RunCampaign(lib, c, scorer, f);
    failed_attempts += r.report.failed_attempts;
    EXPECT_TRUE(r.missing.empty());
    EXPECT_EQ(Keys(r.records), Keys(lib));
    EXPECT_EQ(ReadCampaignOutput(c.out_dir), r.records);
  }
  EXPECT_GT(failed_attempts, 0);
}

TEST_F(ScreenTest, ExhaustedRetriesAreListedAsMissing) {
  const auto lib = GenerateLibrary(30, {"t"}, 10, 8);
  SyntheticScorer scorer;
  FaultPlan f;
  f.seed = 1;
  CampaignConfig c;
  c.n_jobs = 3;
  c.ranks_per_job = 2;
  c.loaders_per_rank = 1;
  c.out_dir = dir_;
  f.job_failure_rate = 1.0;
  const CampaignResult all_fail = RunCampaign(lib, c, scorer, f);
  EXPECT_TRUE(all_fail.records.empty());
  ASSERT_EQ(all_fail.missing.size(), 3u);
  EXPECT_EQ(all_fail.report.attempts, 12);
  EXPECT_EQ(all_fail.report.missing_poses, lib.size());
  std::ifstream in(dir_ / "missing_ranges.json");
  const json missing = json::parse(in);
  ASSERT_EQ(missing.size(), 3u);
  EXPECT_EQ(missing[1].at("begin"), 100);
  EXPECT_EQ(missing[1].at("end"), 200);
  for (const auto& entry : fs::directory_iterator(dir_)) {
    EXPECT_EQ(entry.path().filename().string().rfind("job-", 0), std::string::npos);
  }
}

TEST_F(ScreenTest, LoadErrorsAreLoggedNotFatal) {
  class Flaky : public SyntheticScorer {
   public:
    LoadedPose Load(const PoseRecord& r) const override {
      if (r.key.pose_id == 3) throw std::runtime_error("bad header");
      return SyntheticScorer::Load(r);
    }
  };
  const auto lib = GenerateLibrary(20, {"t"}, 10, 8);
  Flaky scorer;
  CampaignConfig c;
  c.n_jobs = 2;
  c.ranks_per_job = 3;
  c.out_dir = dir_;
  const CampaignResult r = RunCampaign(lib, c, scorer, FaultPlan{});
  EXPECT_EQ(r.errors.size(), 20u);
  EXPECT_EQ(r.records.size(), 180u);
  for (const PoseError& e : r.errors) {
    EXPECT_EQ(e.key.pose_id, 3);
    EXPECT_NE(e.reason.find("bad header"), std::string::npos);
  }
  std::ifstream in(dir_ / "errors.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 20u);
}

TEST_F(ScreenTest, OneHundredTwentyFiveParallelJobsAccepted) {
  const auto lib = GenerateLibrary(125, {"t"}, 10, 1);
  SyntheticScorer scorer;
  CampaignConfig c;
  c.n_jobs = 125;
  c.parallelism = 125;
  c.ranks_per_job = 2;
  c.loaders_per_rank = 1;
  const CampaignResult r = RunCampaign(lib, c, scorer, FaultPlan{});
  EXPECT_EQ(r.report.completed_jobs, 125);
  EXPECT_EQ(Keys(r.records), Keys(lib));
}

TEST_F(ScreenTest, CampaignRejectsBadConfig) {
  const auto lib = GenerateLibrary(2, {"t"}, 1, 1);
  SyntheticScorer scorer;
  CampaignConfig c;
  c.streaming_write = true;
  EXPECT_THROW(RunCampaign(lib, c, scorer, {}), std::invalid_argument);
  c = {};
  c.parallelism = 0;
  EXPECT_THROW(RunCampaign(lib, c, scorer, {}), std::invalid_argument);
  c = {};
  fs::create_directories(dir_);
  std::ofstream(dir_ / "stale") << "x";
  c.out_dir = dir_;
  EXPECT_THROW(RunCampaign(lib, c, scorer, {}), std::invalid_argument);
}

TEST(ThroughputTest, ReferenceRateIdentities) {
  const ThroughputReport r = FromPosesPerSecond(108.0, 10.0);
  EXPECT_EQ(r.poses_per_hour, 388'800.0);
  EXPECT_EQ(r.compounds_per_hour, 38'880.0);
  EXPECT_EQ(CompoundCount(2'000'000, 10.0), 200'000.0);
  EXPECT_THROW(FromPosesPerSecond(1.0, 0.0), std::invalid_argument);
}

TEST(ThroughputTest, IdentitiesHoldForMeasuredReports) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.001, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const ThroughputReport r =
        MakeThroughputReport(u(rng), u(rng), u(rng), rng() % 100000, 1.0 + rng() % 40);
    EXPECT_EQ(r.poses_per_second, static_cast<double>(r.poses) / r.evaluation_seconds);
    EXPECT_EQ(r.poses_per_hour, 3600.0 * r.poses_per_second);
    EXPECT_EQ(r.compounds_per_hour, r.poses_per_hour / r.poses_per_compound);
    EXPECT_EQ(ThroughputReportFromJson(json::parse(ToJson(r).dump())), r);
  }
}

TEST(ScalingTest, FixedCostScorerScalesWithWorkerGroups) {
  const auto lib = GenerateLibrary(60, {"t"}, 10, 1);
  const SyntheticScorer scorer(0.001);
  const auto rows = ScalingExperiment(lib, {1, 2, 4}, {12, 56}, 1, scorer);
  ASSERT_EQ(rows.size(), 6u);
  auto mean = [&](int groups, std::size_t batch) {
    for (const ScalingRow& r : rows) {
      if (r.worker_groups == groups && r.batch_size == batch) return r.mean_seconds;
    }
    return -1.0;
  };
  for (std::size_t b : {12u, 56u}) {
    EXPECT_LE(mean(4, b), 0.35 * mean(1, b));
    EXPECT_LE(mean(2, b), mean(1, b));
    EXPECT_LE(mean(4, b), mean(2, b));
  }
  EXPECT_LE(std::abs(mean(1, 12) - mean(1, 56)), 0.15 * std::max(mean(1, 12), mean(1, 56)));
}

}  // namespace
}  // namespace fusion::screen
