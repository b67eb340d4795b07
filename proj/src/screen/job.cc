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

#include "fusion/screen/job.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "fusion/data/rng.h"

namespace fusion::screen {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kCorruptStream = 0x636f7272;
constexpr std::uint64_t kRankStream = 0x72616e6b;
constexpr std::uint64_t kJobStream = 0x6a6f6221;

double Seconds(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

std::uint64_t AttemptHash(std::uint64_t seed, std::uint64_t stream, int job_id, int attempt) {
  return MixSeed(MixSeed(MixSeed(seed, stream), static_cast<std::uint64_t>(job_id)),
                 static_cast<std::uint64_t>(attempt));
}

// Everything one rank produces.
struct RankOutput {
  std::vector<PredictionRecord> records;
  std::vector<PoseError> errors;
};

// One rank: loader threads fill a ring of `window` batches in slice order and
// the rank thread scores batch k once all of its slots are filled.
class RankRunner {
 public:
  RankRunner(const JobSpec& spec, int rank, std::span<const PoseRecord> library,
             const Scorer& scorer, const FaultPlan& faults, int failing_rank,
             std::atomic<bool>* job_abort)
      : spec_(spec),
        rank_(rank),
        slice_(library.subspan(spec.rank_ranges[rank].begin, spec.rank_ranges[rank].size())),
        scorer_(scorer),
        faults_(faults),
        fail_(failing_rank == rank),
        job_abort_(job_abort),
        batch_(spec.batch_size),
        window_(std::max<std::size_t>(
            2, (static_cast<std::size_t>(spec.loaders_per_rank) + batch_ - 1) / batch_ + 1)),
        slots_(window_ * batch_),
        filled_(window_, 0) {}

  RankOutput Run() {
    std::vector<std::thread> loaders;
    const std::size_t n_loaders =
        std::min<std::size_t>(static_cast<std::size_t>(spec_.loaders_per_rank), slice_.size());
    for (std::size_t i = 0; i < n_loaders; ++i) loaders.emplace_back([this] { LoaderLoop(); });
    try {
      ScoreLoop();
    } catch (...) {
      Stop();
      for (auto& t : loaders) t.join();
      throw;
    }
    Stop();
    for (auto& t : loaders) t.join();
    return std::move(out_);
  }

 private:
  struct Slot {
    const PoseRecord* record = nullptr;
    std::optional<LoadedPose> pose;
    std::string error;
  };

  std::size_t BatchCount() const { return (slice_.size() + batch_ - 1) / batch_; }
  std::size_t BatchSize(std::size_t k) const {
    return std::min(batch_, slice_.size() - k * batch_);
  }

  void Stop() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
  }

  void LoaderLoop() {
    for (;;) {
      const std::size_t i = next_.fetch_add(1);
      if (i >= slice_.size()) return;
      const std::size_t k = i / batch_;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || k < consumed_ + window_; });
        if (stop_) return;
      }
      Slot slot;
      const PoseRecord& record = slice_[i];
      slot.record = &record;
      if (faults_.CorruptRecord(record.key)) {
        slot.error = "corrupt record: unreadable metadata";
      } else {
        try {
          slot.pose = scorer_.Load(record);
        } catch (const std::exception& e) {
          slot.error = std::string("load failed: ") + e.what();
        }
      }
      bool complete = false;
      {
        std::lock_guard lock(mu_);
        slots_[i % slots_.size()] = std::move(slot);
        complete = ++filled_[k % window_] == BatchSize(k);
      }
      if (complete) cv_.notify_all();
    }
  }

  void ScoreLoop() {
    const std::size_t batches = BatchCount();
    std::vector<Slot> taken;
    for (std::size_t k = 0; k < batches; ++k) {
      if (job_abort_->load()) throw std::runtime_error("aborted: another rank failed");
      if (fail_ && k == batches / 2) {
        job_abort_->store(true);
        throw std::runtime_error("rank " + std::to_string(rank_) + ": node failure");
      }
      const std::size_t size = BatchSize(k);
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return filled_[k % window_] == size; });
        taken.clear();
        for (std::size_t j = 0; j < size; ++j) {
          taken.push_back(std::move(slots_[(k * batch_ + j) % slots_.size()]));
        }
        filled_[k % window_] = 0;
        ++consumed_;
      }
      cv_.notify_all();
      ScoreBatch(taken);
    }
    if (fail_) {
      job_abort_->store(true);
      throw std::runtime_error("rank " + std::to_string(rank_) + ": node failure");
    }
  }

  void ScoreBatch(std::vector<Slot>& taken) {
    std::vector<LoadedPose> poses;
    for (Slot& s : taken) {
      if (s.error.empty()) poses.push_back(std::move(*s.pose));
    }
    std::vector<models::ItemPrediction> preds;
    if (!poses.empty()) preds = scorer_.Score(poses);
    if (preds.size() != poses.size()) {
      throw std::runtime_error("scorer returned a wrong number of predictions");
    }
    std::size_t p = 0;
    for (const Slot& s : taken) {
      if (!s.error.empty()) {
        out_.errors.push_back({s.record->key, spec_.job_id, s.error});
        continue;
      }
      const PoseKey& key = s.record->key;
      const models::ItemPrediction& pred = preds[p++];
      if (pred.value) {
        out_.records.push_back({key.compound_id, key.target_id, key.pose_id, *pred.value,
                                spec_.job_id, rank_});
      } else {
        out_.errors.push_back({key, spec_.job_id, "scoring failed: " + pred.error});
      }
    }
  }

  const JobSpec& spec_;
  int rank_;
  std::span<const PoseRecord> slice_;
  const Scorer& scorer_;
  const FaultPlan& faults_;
  bool fail_;
  std::atomic<bool>* job_abort_;
  std::size_t batch_;
  std::size_t window_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Slot> slots_;
  std::vector<std::size_t> filled_;
  std::size_t consumed_ = 0;
  bool stop_ = false;
  std::atomic<std::size_t> next_{0};
  RankOutput out_;
};

void WriteLines(const fs::path& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const json& j : lines) out << j.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void JobSpec::Validate() const {
  if (ranks_per_job < 1) throw std::invalid_argument("job: ranks_per_job must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("job: batch_size must be >= 1");
  if (loaders_per_rank < 1) throw std::invalid_argument("job: loaders_per_rank must be >= 1");
  if (rank_ranges.size() != static_cast<std::size_t>(ranks_per_job)) {
    throw std::invalid_argument("job: rank ranges do not match ranks_per_job");
  }
  std::size_t at = poses.begin;
  for (const PoseRange& r : rank_ranges) {
    if (r.begin != at || r.end < r.begin) throw std::invalid_argument("job: rank ranges not contiguous");
    at = r.end;
  }
  if (at != poses.end) throw std::invalid_argument("job: rank ranges do not cover the job");
}

std::vector<PoseRange> BalancedSplit(PoseRange range, std::size_t parts) {
  if (parts == 0) throw std::invalid_argument("split: parts must be positive");
  std::vector<PoseRange> out;
  const std::size_t n = range.size();
  const std::size_t base = n / parts;
  const std::size_t extra = n % parts;
  std::size_t at = range.begin;
  for (std::size_t i = 0; i < parts; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    out.push_back({at, at + len});
    at += len;
  }
  return out;
}

std::vector<JobSpec> Partition(std::size_t library_size, int n_jobs, int ranks_per_job,
                               std::size_t batch_size, int loaders_per_rank) {
  if (library_size == 0) throw std::invalid_argument("partition: empty library");
  if (n_jobs < 1) throw std::invalid_argument("partition: n_jobs must be >= 1");
  if (ranks_per_job < 1) throw std::invalid_argument("partition: ranks_per_job must be >= 1");
  std::vector<JobSpec> jobs;
  const auto job_ranges = BalancedSplit({0, library_size}, static_cast<std::size_t>(n_jobs));
  for (int j = 0; j < n_jobs; ++j) {
    JobSpec spec;
    spec.job_id = j;
    spec.poses = job_ranges[static_cast<std::size_t>(j)];
    spec.ranks_per_job = ranks_per_job;
    spec.batch_size = batch_size;
    spec.loaders_per_rank = loaders_per_rank;
    spec.rank_ranges = BalancedSplit(spec.poses, static_cast<std::size_t>(ranks_per_job));
    spec.Validate();
    jobs.push_back(std::move(spec));
  }
  return jobs;
}

void FaultPlan::Validate() const {
  for (double p : {record_corruption_rate, rank_failure_rate, job_failure_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("faults: rates must be in [0, 1]");
  }
}

bool FaultPlan::CorruptRecord(const PoseKey& key) const {
  if (record_corruption_rate <= 0.0) return false;
  return HashToUnit(MixSeed(MixSeed(seed, kCorruptStream), KeyHash(key))) <
         record_corruption_rate;
}

int FaultPlan::FailingRank(int job_id, int attempt, int ranks) const {
  if (rank_failure_rate <= 0.0) return -1;
  const std::uint64_t h = AttemptHash(seed, kRankStream, job_id, attempt);
  if (HashToUnit(h) >= rank_failure_rate) return -1;
  return static_cast<int>(Mix64(h) % static_cast<std::uint64_t>(ranks));
}

bool FaultPlan::JobFails(int job_id, int attempt) const {
  if (job_failure_rate <= 0.0) return false;
  return HashToUnit(AttemptHash(seed, kJobStream, job_id, attempt)) < job_failure_rate;
}

json ToJson(const FaultPlan& f) {
  return {{"record_corruption_rate", f.record_corruption_rate},
          {"rank_failure_rate", f.rank_failure_rate},
          {"job_failure_rate", f.job_failure_rate},
          {"seed", f.seed}};
}

FaultPlan FaultPlanFromJson(const json& j) {
  FaultPlan f;
  for (const auto& [k, v] : j.items()) {
    if (k == "record_corruption_rate") f.record_corruption_rate = v.get<double>();
    else if (k == "rank_failure_rate") f.rank_failure_rate = v.get<double>();
    else if (k == "job_failure_rate") f.job_failure_rate = v.get<double>();
    else if (k == "seed") f.seed = v.get<std::uint64_t>();
    else throw std::invalid_argument("faults: unknown key '" + k + "'");
  }
  f.Validate();
  return f;
}

json ToJson(const PredictionRecord& r) {
  return {{"compound", r.compound_id}, {"target", r.target_id}, {"pose", r.pose_id},
          {"pk", r.predicted_pk},      {"job", r.job_id},       {"rank", r.rank_id}};
}

PredictionRecord PredictionRecordFromJson(const json& j) {
  return {j.at("compound").get<std::string>(), j.at("target").get<std::string>(),
          j.at("pose").get<int>(),             j.at("pk").get<double>(),
          j.at("job").get<int>(),              j.at("rank").get<int>()};
}

json ToJson(const PoseError& e) {
  return {{"compound", e.key.compound_id},
          {"target", e.key.target_id},
          {"pose", e.key.pose_id},
          {"job", e.job_id},
          {"reason", e.reason}};
}

std::string JobDirectoryName(int job_id) {
  char name[32];
  std::snprintf(name, sizeof(name), "job-%05d", job_id);
  return name;
}

JobResult RunJob(const JobSpec& spec, std::span<const PoseRecord> library, const Scorer& scorer,
                 const FaultPlan& faults, int attempt, const JobOptions& options) {
  spec.Validate();
  faults.Validate();
  if (spec.poses.end > library.size()) throw std::invalid_argument("job: range beyond library");
  using Clock = std::chrono::steady_clock;
  JobResult result;
  result.job_id = spec.job_id;
  result.attempt = attempt;

  const auto t0 = Clock::now();
  const int failing_rank = faults.FailingRank(spec.job_id, attempt, spec.ranks_per_job);
  std::atomic<bool> abort{false};
  std::vector<std::unique_ptr<RankRunner>> runners;
  for (int r = 0; r < spec.ranks_per_job; ++r) {
    runners.push_back(
        std::make_unique<RankRunner>(spec, r, library, scorer, faults, failing_rank, &abort));
  }
  std::vector<RankOutput> outputs(runners.size());
  std::vector<std::string> failures(runners.size());
  std::vector<std::thread> ranks;
  const auto t1 = Clock::now();
  for (std::size_t r = 0; r < runners.size(); ++r) {
    ranks.emplace_back([&, r] {
      try {
        outputs[r] = runners[r]->Run();
      } catch (const std::exception& e) {
        abort.store(true);
        failures[r] = e.what();
      }
    });
  }
  for (auto& t : ranks) t.join();
  const auto t2 = Clock::now();

  // Report the rank that died rather than the ranks it took down.
  if (failing_rank >= 0 && !failures[static_cast<std::size_t>(failing_rank)].empty()) {
    result.failure = failures[static_cast<std::size_t>(failing_rank)];
  }
  for (const std::string& f : failures) {
    if (result.failure.empty() && !f.empty()) result.failure = f;
  }
  if (!result.failure.empty()) {
    result.status = JobStatus::kFailed;
    return result;
  }

  // Gather, then redistribute by compound for parallel shard writing.
  for (RankOutput& o : outputs) {
    result.records.insert(result.records.end(), o.records.begin(), o.records.end());
    result.errors.insert(result.errors.end(), o.errors.begin(), o.errors.end());
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return a.key() < b.key(); });
  std::sort(result.errors.begin(), result.errors.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });

  if (!options.out_dir.empty()) {
    const fs::path final_dir = options.out_dir / JobDirectoryName(spec.job_id);
    const fs::path staging =
        options.out_dir / (".staging-" + JobDirectoryName(spec.job_id) + "-" +
                           std::to_string(attempt));
    try {
      fs::remove_all(staging);
      fs::create_directories(staging);
      // Compound groups are contiguous after sorting; ranks get balanced runs
      // of whole groups so a compound never spans two shards.
      std::vector<std::size_t> group_starts;
      for (std::size_t i = 0; i < result.records.size(); ++i) {
        if (i == 0 || result.records[i].compound_id != result.records[i - 1].compound_id) {
          group_starts.push_back(i);
        }
      }
      group_starts.push_back(result.records.size());
      const auto groups = BalancedSplit({0, group_starts.size() - 1},
                                        static_cast<std::size_t>(spec.ranks_per_job));
      std::vector<json> shard_entries(groups.size());
      std::vector<std::string> write_errors(groups.size());
      std::vector<std::thread> writers;
      for (std::size_t r = 0; r < groups.size(); ++r) {
        writers.emplace_back([&, r] {
          try {
            const std::size_t b = group_starts[groups[r].begin];
            const std::size_t e = group_starts[groups[r].end];
            char name[32];
            std::snprintf(name, sizeof(name), "shard-%03zu.jsonl", r);
            std::vector<json> lines;
            lines.reserve(e - b);
            for (std::size_t i = b; i < e; ++i) lines.push_back(ToJson(result.records[i]));
            WriteLines(staging / name, lines);
            shard_entries[r] = {{"file", name}, {"writer_rank", r}, {"records", e - b}};
          } catch (const std::exception& ex) {
            write_errors[r] = ex.what();
          }
        });
      }
      for (auto& t : writers) t.join();
      for (const std::string& e : write_errors) {
        if (!e.empty()) throw std::runtime_error(e);
      }
      if (faults.JobFails(spec.job_id, attempt)) {
        throw std::runtime_error("broken pipe while writing output");
      }
      std::vector<json> error_lines;
      for (const PoseError& e : result.errors) error_lines.push_back(ToJson(e));
      WriteLines(staging / "errors.jsonl", error_lines);
      const json manifest = {{"job", spec.job_id},
                             {"attempt", attempt},
                             {"begin", spec.poses.begin},
                             {"end", spec.poses.end},
                             {"records", result.records.size()},
                             {"errors", result.errors.size()},
                             {"shards", shard_entries}};
      WriteLines(staging / "job.json", {manifest});
      fs::remove_all(final_dir);
      fs::rename(staging, final_dir);
      result.output_dir = final_dir;
    } catch (const std::exception& e) {
      std::error_code ec;
      fs::remove_all(staging, ec);
      result.status = JobStatus::kFailed;
      result.failure = e.what();
      result.records.clear();
      result.errors.clear();
      return result;
    }
  } else if (faults.JobFails(spec.job_id, attempt)) {
    result.status = JobStatus::kFailed;
    result.failure = "broken pipe while writing output";
    result.records.clear();
    result.errors.clear();
    return result;
  }
  const auto t3 = Clock::now();
  result.status = JobStatus::kCompleted;
  result.report = MakeThroughputReport(Seconds(t0, t1), Seconds(t1, t2), Seconds(t2, t3),
                                       result.records.size(), options.poses_per_compound);
  return result;
}

}  // namespace fusion::screen
