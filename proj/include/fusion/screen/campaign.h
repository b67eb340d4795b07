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

#ifndef FUSION_SCREEN_CAMPAIGN_H_
#define FUSION_SCREEN_CAMPAIGN_H_

#include <filesystem>
#include <vector>

#include "fusion/screen/job.h"

namespace fusion::screen {

struct CampaignConfig {
  int n_jobs = 1;
  int ranks_per_job = 16;
  std::size_t batch_size = 56;
  int loaders_per_rank = 12;
  // Jobs running at once.
  int parallelism = 1;
  // Extra attempts after a job fails.
  int max_retries = 3;
  // Output root; empty keeps everything in memory. Must be empty or absent.
  std::filesystem::path out_dir;
  // Per-rank incremental writing. Not implemented; jobs always write after
  // all ranks finish.
  bool streaming_write = false;

  void Validate() const;
};

struct AttemptRecord {
  int job_id = 0;
  int attempt = 0;
  bool ok = false;
  std::string failure;
};

struct MissingRange {
  int job_id = 0;
  PoseRange poses;
  std::string reason;
};

struct CampaignReport {
  int jobs = 0;
  int completed_jobs = 0;
  int attempts = 0;
  int failed_attempts = 0;
  std::size_t input_poses = 0;
  std::size_t scored_poses = 0;
  std::size_t error_poses = 0;
  std::size_t missing_poses = 0;
  double wall_seconds = 0.0;
  // Mean of the completed jobs' reports.
  ThroughputReport mean_job;
};

nlohmann::json ToJson(const CampaignReport& r);

struct CampaignResult {
  // Sorted by pose key.
  std::vector<PredictionRecord> records;
  std::vector<PoseError> errors;
  std::vector<MissingRange> missing;
  std::vector<AttemptRecord> attempts;
  std::vector<ThroughputReport> job_reports;
  CampaignReport report;
};

// Schedules the jobs on `parallelism` workers; a failed job goes back on the
// queue until it has used max_retries extra attempts, after which its range is
// listed as missing. With an output directory, writes per-job directories,
// manifest.json, errors.jsonl, missing_ranges.json and timings.json; only
// the last holds wall-clock figures.
CampaignResult RunCampaign(const std::vector<PoseRecord>& library, const CampaignConfig& config,
                           const Scorer& scorer, const FaultPlan& faults);

// Reads every shard listed by a campaign manifest.
std::vector<PredictionRecord> ReadCampaignOutput(const std::filesystem::path& out_dir);

struct ScalingRow {
  int worker_groups = 0;
  std::size_t batch_size = 0;
  std::vector<double> evaluation_seconds;
  double mean_seconds = 0.0;
  double stddev_seconds = 0.0;
};

// Scores the same library once per (worker groups, batch size) and repeat as
// a single in-memory job with that many ranks, timing the evaluation phase.
std::vector<ScalingRow> ScalingExperiment(const std::vector<PoseRecord>& library,
                                          const std::vector<int>& worker_groups,
                                          const std::vector<std::size_t>& batch_sizes,
                                          int repeats, const Scorer& scorer,
                                          int loaders_per_rank = 2);

nlohmann::json ToJson(const std::vector<ScalingRow>& rows);

}  // namespace fusion::screen

#endif  // FUSION_SCREEN_CAMPAIGN_H_
