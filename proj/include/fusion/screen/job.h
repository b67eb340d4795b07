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

#ifndef FUSION_SCREEN_JOB_H_
#define FUSION_SCREEN_JOB_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fusion/screen/library.h"
#include "fusion/screen/report.h"
#include "fusion/screen/scorer.h"
#include "json.hpp"

namespace fusion::screen {

// Half-open index range into the library.
struct PoseRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const PoseRange&, const PoseRange&) = default;
};

struct JobSpec {
  int job_id = 0;
  PoseRange poses;
  int ranks_per_job = 16;
  std::size_t batch_size = 56;
  int loaders_per_rank = 12;
  // Contiguous per-rank slices of `poses`, sizes differing by at most one.
  std::vector<PoseRange> rank_ranges;

  void Validate() const;
};

// Splits [begin, end) into `parts` contiguous ranges whose sizes differ by at
// most one, larger ranges first.
std::vector<PoseRange> BalancedSplit(PoseRange range, std::size_t parts);

// Contiguous split of the library into jobs, then of each job into ranks.
std::vector<JobSpec> Partition(std::size_t library_size, int n_jobs, int ranks_per_job,
                               std::size_t batch_size = 56, int loaders_per_rank = 12);

// Deterministic fault injection. Corruption is a property of a record and
// persists across retries; rank and job failures are drawn per attempt.
struct FaultPlan {
  double record_corruption_rate = 0.0;
  // Probability that some rank of a job attempt dies mid-evaluation.
  double rank_failure_rate = 0.0;
  // Probability that a job attempt fails while writing output.
  double job_failure_rate = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
  bool CorruptRecord(const PoseKey& key) const;
  // Failing rank for this attempt, or -1.
  int FailingRank(int job_id, int attempt, int ranks) const;
  bool JobFails(int job_id, int attempt) const;
};

nlohmann::json ToJson(const FaultPlan& f);
FaultPlan FaultPlanFromJson(const nlohmann::json& j);

struct PredictionRecord {
  std::string compound_id;
  std::string target_id;
  int pose_id = 0;
  double predicted_pk = 0.0;
  int job_id = 0;
  int rank_id = 0;

  PoseKey key() const { return {compound_id, target_id, pose_id}; }
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

nlohmann::json ToJson(const PredictionRecord& r);
PredictionRecord PredictionRecordFromJson(const nlohmann::json& j);

struct PoseError {
  PoseKey key;
  int job_id = 0;
  std::string reason;
  friend bool operator==(const PoseError&, const PoseError&) = default;
};

nlohmann::json ToJson(const PoseError& e);

enum class JobStatus { kCompleted, kFailed };

struct JobResult {
  int job_id = 0;
  int attempt = 0;
  JobStatus status = JobStatus::kFailed;
  std::string failure;
  // Sorted by pose key.
  std::vector<PredictionRecord> records;
  std::vector<PoseError> errors;
  ThroughputReport report;
  // Final directory holding this job's shards, empty when nothing was written.
  std::filesystem::path output_dir;
};

struct JobOptions {
  // Where the job directory is created; empty keeps results in memory only.
  std::filesystem::path out_dir;
  double poses_per_compound = 10.0;
};

// Runs one attempt of a job. Each rank owns a slice and `loaders_per_rank`
// loader threads prefetching a bounded window of batches; batch composition
// depends only on the slice, so results do not depend on the loader count.
// After every rank finishes, the records are gathered, sorted, and
// redistributed by compound so ranks write disjoint shards in parallel into a
// staging directory, which is renamed into place only when everything
// succeeded. A failed attempt leaves no output.
JobResult RunJob(const JobSpec& spec, std::span<const PoseRecord> library, const Scorer& scorer,
                 const FaultPlan& faults, int attempt, const JobOptions& options);

std::string JobDirectoryName(int job_id);

}  // namespace fusion::screen

#endif  // FUSION_SCREEN_JOB_H_
