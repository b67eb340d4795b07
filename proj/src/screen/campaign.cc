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

#include "fusion/screen/campaign.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace fusion::screen {

using nlohmann::json;
namespace fs = std::filesystem;

void CampaignConfig::Validate() const {
  if (n_jobs < 1) throw std::invalid_argument("campaign: n_jobs must be >= 1");
  if (parallelism < 1) throw std::invalid_argument("campaign: parallelism must be >= 1");
  if (max_retries < 0) throw std::invalid_argument("campaign: max_retries must be >= 0");
  if (streaming_write) {
    throw std::invalid_argument("campaign: streaming write mode is not implemented");
  }
}

json ToJson(const CampaignReport& r) {
  return {{"jobs", r.jobs},
          {"completed_jobs", r.completed_jobs},
          {"attempts", r.attempts},
          {"failed_attempts", r.failed_attempts},
          {"input_poses", r.input_poses},
          {"scored_poses", r.scored_poses},
          {"error_poses", r.error_poses},
          {"missing_poses", r.missing_poses},
          {"wall_seconds", r.wall_seconds},
          {"mean_job", ToJson(r.mean_job)}};
}

namespace {

void WriteJson(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

CampaignResult RunCampaign(const std::vector<PoseRecord>& library, const CampaignConfig& config,
                           const Scorer& scorer, const FaultPlan& faults) {
  config.Validate();
  faults.Validate();
  const std::vector<JobSpec> jobs = Partition(library.size(), config.n_jobs,
                                              config.ranks_per_job, config.batch_size,
                                              config.loaders_per_rank);
  if (!config.out_dir.empty()) {
    if (fs::exists(config.out_dir) && !fs::is_empty(config.out_dir)) {
      throw std::invalid_argument("campaign: output directory is not empty: " +
                                  config.out_dir.string());
    }
    fs::create_directories(config.out_dir);
  }
  JobOptions options;
  options.out_dir = config.out_dir;
  options.poses_per_compound = MeanPosesPerCompound(library);

  const auto start = std::chrono::steady_clock::now();
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::size_t> queue(jobs.size());
  std::iota(queue.begin(), queue.end(), std::size_t{0});
  std::vector<int> attempts(jobs.size(), 0);
  std::vector<std::optional<JobResult>> done(jobs.size());
  std::vector<std::string> last_failure(jobs.size());
  std::vector<AttemptRecord> attempt_log;
  std::size_t unfinished = jobs.size();
  std::string fatal;

  auto worker = [&] {
    for (;;) {
      std::size_t j;
      int attempt;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return !queue.empty() || unfinished == 0 || !fatal.empty(); });
        if (queue.empty() || !fatal.empty()) return;
        j = queue.front();
        queue.pop_front();
        attempt = attempts[j]++;
      }
      JobResult r;
      try {
        r = RunJob(jobs[j], library, scorer, faults, attempt, options);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        fatal = e.what();
        cv.notify_all();
        return;
      }
      {
        std::lock_guard lock(mu);
        const bool ok = r.status == JobStatus::kCompleted;
        attempt_log.push_back({jobs[j].job_id, attempt, ok, r.failure});
        if (ok) {
          done[j] = std::move(r);
          --unfinished;
        } else if (attempts[j] <= config.max_retries) {
          last_failure[j] = r.failure;
          queue.push_back(j);
        } else {
          last_failure[j] = r.failure;
          --unfinished;
        }
      }
      cv.notify_all();
    }
  };
  const int n_workers = std::min<int>(config.parallelism, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (!fatal.empty()) throw std::runtime_error("campaign aborted: " + fatal);

  CampaignResult result;
  std::sort(attempt_log.begin(), attempt_log.end(), [](const auto& a, const auto& b) {
    return std::tie(a.job_id, a.attempt) < std::tie(b.job_id, b.attempt);
  });
  result.attempts = std::move(attempt_log);
  json job_entries = json::array();
  json job_timings = json::array();
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (done[j]) {
      JobResult& r = *done[j];
      result.records.insert(result.records.end(), r.records.begin(), r.records.end());
      result.errors.insert(result.errors.end(), r.errors.begin(), r.errors.end());
      result.job_reports.push_back(r.report);
      job_entries.push_back({{"job", r.job_id},
                             {"attempt", r.attempt},
                             {"directory", r.output_dir.empty()
                                               ? std::string()
                                               : r.output_dir.filename().string()},
                             {"begin", jobs[j].poses.begin},
                             {"end", jobs[j].poses.end},
                             {"records", r.records.size()},
                             {"errors", r.errors.size()}});
      job_timings.push_back({{"job", r.job_id}, {"report", ToJson(r.report)}});
    } else {
      result.missing.push_back({jobs[j].job_id, jobs[j].poses,
                                "retry budget exhausted after " + std::to_string(attempts[j]) +
                                    " attempts: " + last_failure[j]});
    }
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return a.key() < b.key(); });
  std::sort(result.errors.begin(), result.errors.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });

  CampaignReport& rep = result.report;
  rep.jobs = static_cast<int>(jobs.size());
  rep.completed_jobs = static_cast<int>(result.job_reports.size());
  rep.attempts = static_cast<int>(result.attempts.size());
  for (const AttemptRecord& a : result.attempts) rep.failed_attempts += a.ok ? 0 : 1;
  rep.input_poses = library.size();
  rep.scored_poses = result.records.size();
  rep.error_poses = result.errors.size();
  for (const MissingRange& m : result.missing) rep.missing_poses += m.poses.size();
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!result.job_reports.empty()) rep.mean_job = AverageReports(result.job_reports);

  if (!config.out_dir.empty()) {
    json missing = json::array();
    for (const MissingRange& m : result.missing) {
      missing.push_back(
          {{"job", m.job_id}, {"begin", m.poses.begin}, {"end", m.poses.end}, {"reason", m.reason}});
    }
    std::ofstream errors(config.out_dir / "errors.jsonl");
    for (const PoseError& e : result.errors) errors << ToJson(e).dump() << '\n';
    for (const AttemptRecord& a : result.attempts) {
      if (!a.ok) {
        errors << json{{"job", a.job_id}, {"attempt", a.attempt}, {"reason", a.failure}}.dump()
               << '\n';
      }
    }
    if (!errors) throw std::runtime_error("cannot write campaign error log");
    WriteJson(config.out_dir / "missing_ranges.json", missing);
    // Content files are reproducible; wall-clock figures live in timings.json.
    json counts = ToJson(rep);
    counts.erase("wall_seconds");
    counts.erase("mean_job");
    WriteJson(config.out_dir / "manifest.json",
              {{"jobs", job_entries}, {"missing", missing}, {"summary", counts}});
    WriteJson(config.out_dir / "timings.json",
              {{"wall_seconds", rep.wall_seconds},
               {"mean_job", ToJson(rep.mean_job)},
               {"jobs", job_timings}});
  }
  return result;
}

std::vector<PredictionRecord> ReadCampaignOutput(const fs::path& out_dir) {
  std::ifstream in(out_dir / "manifest.json");
  if (!in) throw std::runtime_error("cannot read " + (out_dir / "manifest.json").string());
  const json manifest = json::parse(in);
  std::vector<PredictionRecord> out;
  for (const json& job : manifest.at("jobs")) {
    const fs::path dir = out_dir / job.at("directory").get<std::string>();
    std::ifstream jm(dir / "job.json");
    if (!jm) throw std::runtime_error("missing job manifest in " + dir.string());
    const json job_manifest = json::parse(jm);
    for (const json& shard : job_manifest.at("shards")) {
      std::ifstream s(dir / shard.at("file").get<std::string>());
      if (!s) throw std::runtime_error("missing shard in " + dir.string());
      std::size_t n = 0;
      for (std::string line; std::getline(s, line); ++n) {
        out.push_back(PredictionRecordFromJson(json::parse(line)));
      }
      if (n != shard.at("records").get<std::size_t>()) {
        throw std::runtime_error("shard record count mismatch in " + dir.string());
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  return out;
}

std::vector<ScalingRow> ScalingExperiment(const std::vector<PoseRecord>& library,
                                          const std::vector<int>& worker_groups,
                                          const std::vector<std::size_t>& batch_sizes,
                                          int repeats, const Scorer& scorer,
                                          int loaders_per_rank) {
  if (repeats < 1) throw std::invalid_argument("scaling: repeats must be >= 1");
  std::vector<ScalingRow> rows;
  for (int groups : worker_groups) {
    for (std::size_t batch : batch_sizes) {
      ScalingRow row;
      row.worker_groups = groups;
      row.batch_size = batch;
      const JobSpec spec = Partition(library.size(), 1, groups, batch, loaders_per_rank)[0];
      for (int rep = 0; rep < repeats; ++rep) {
        const JobResult r = RunJob(spec, library, scorer, FaultPlan{}, rep, JobOptions{});
        if (r.status != JobStatus::kCompleted) throw std::runtime_error("scaling: " + r.failure);
        row.evaluation_seconds.push_back(r.report.evaluation_seconds);
      }
      const double n = static_cast<double>(row.evaluation_seconds.size());
      row.mean_seconds =
          std::accumulate(row.evaluation_seconds.begin(), row.evaluation_seconds.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : row.evaluation_seconds) ss += (v - row.mean_seconds) * (v - row.mean_seconds);
      row.stddev_seconds = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

json ToJson(const std::vector<ScalingRow>& rows) {
  json out = json::array();
  for (const ScalingRow& r : rows) {
    out.push_back({{"worker_groups", r.worker_groups},
                   {"batch_size", r.batch_size},
                   {"evaluation_seconds", r.evaluation_seconds},
                   {"mean_seconds", r.mean_seconds},
                   {"stddev_seconds", r.stddev_seconds}});
  }
  return out;
}

}  // namespace fusion::screen
