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

#ifndef FUSION_HPO_PB2_H_
#define FUSION_HPO_PB2_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fusion/hpo/gp.h"
#include "fusion/hpo/space.h"
#include "json.hpp"

namespace fusion::hpo {

struct Pb2Config {
  std::size_t population_size = 8;
  // Fraction of the population in each of the top and bottom groups.
  double quantile_fraction = 0.5;
  // Epochs between exploit/explore decisions.
  int perturbation_interval = 5;
  // Probability of re-sampling each categorical or boolean dimension.
  double mutation_probability = 0.1;
  // Exploration weight of the upper-confidence acquisition.
  double ucb_kappa = 2.0;
  // Relative half-width of the uniform fallback perturbation.
  double fallback_scale = 0.2;
  // When false, continuous values of a clone are left unchanged until the GP
  // has enough data.
  bool fallback_perturbation = true;
  // Trials trained concurrently within a generation.
  int workers = 1;

  void Validate() const;
};

struct ScorePoint {
  int epoch = 0;
  double score = 0.0;
};

struct LineageEvent {
  int epoch = 0;
  int cloned_from = -1;
  Assignment old_config;
  Assignment new_config;
};

struct TrialState {
  int trial_id = 0;
  Assignment config;
  int epoch = 0;
  std::string checkpoint;
  std::vector<ScorePoint> score_history;
  std::vector<LineageEvent> lineage;
  bool failed = false;
  std::string failure;

  // Minimum score within the last perturbation interval.
  std::optional<double> interval_score;
  // Score the trial entered the current interval with.
  std::optional<double> previous_score;
  // The configuration used during the current interval.
  Assignment interval_config;
};

// A trial runner. Implementations must be deterministic in their inputs and
// hold no per-trial state outside the checkpoint bytes, so trials can run
// concurrently and clones are exact.
class Trainable {
 public:
  virtual ~Trainable() = default;
  // Returns the initial checkpoint for a configuration.
  virtual std::string Init(const Assignment& config, std::uint64_t seed) = 0;

  struct Result {
    std::string checkpoint;
    // Validation score (lower is better) after each epoch.
    std::vector<double> scores;
  };
  // Continues from `checkpoint` for `epochs` epochs. May throw; the trial is
  // then marked failed and replaced.
  virtual Result Train(const std::string& checkpoint, const Assignment& config, int epochs,
                       std::uint64_t seed) = 0;
};

struct RankResult {
  std::vector<int> above;  // best first
  std::vector<int> below;  // best first
};

// Trial id and the objective reading at a synchronization point.
struct TrialReading {
  int trial_id = 0;
  int epoch = 0;
  double score = 0.0;
};

// Sorts by (score, trial_id). The top floor(lambda * n) form `above`; the
// bottom ceil(lambda * n), capped at n - |above|, form `below`. Rejects
// readings at unequal epochs.
RankResult ReadyAndRank(const std::vector<TrialReading>& readings, double quantile_fraction);

// Append-only record of every score, clone and failure, one JSON object per
// event. Also streamed to `out` when given.
class RunLog {
 public:
  explicit RunLog(std::ostream* out = nullptr) : out_(out) {}
  void Append(nlohmann::json record);
  const std::vector<nlohmann::json>& records() const { return records_; }

 private:
  std::ostream* out_;
  std::vector<nlohmann::json> records_;
};

// Copies checkpoint, config and interval bookkeeping from `donor` into
// `target` (exploit), then perturbs mutable dimensions (explore): categorical
// and boolean re-sampled with the mutation probability; continuous values
// from the GP-UCB proposal, or the fallback perturbation when the GP is not
// usable. `gp` may be null.
void ExploitExplore(TrialState& target, const TrialState& donor, const HyperParamSpace& space,
                    const Pb2Config& pb2, TimeVaryingGp* gp, double time_index,
                    std::mt19937_64& rng);

struct HpoResult {
  // Snapshot of the trial at the end of the interval with the best score.
  TrialState best;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<TrialState> population;
  std::vector<nlohmann::json> history;
  // Configurations of the initial population, indexed by trial id.
  std::vector<Assignment> initial_configs;
};

// Synchronous PB2: every generation trains all live trials for
// perturbation_interval epochs, ranks them by their best score in the
// interval, and replaces the bottom group (plus failed trials) by perturbed
// clones of the top group. Runs until each trial has trained budget_epochs.
HpoResult RunHpo(const HyperParamSpace& space, const Pb2Config& pb2, int budget_epochs,
                 Trainable& trainable, std::uint64_t seed, std::ostream* log = nullptr);

// Baseline: population_size independent configurations each trained for
// budget_epochs, reporting the best score seen.
HpoResult RandomSearch(const HyperParamSpace& space, std::size_t population, int budget_epochs,
                       Trainable& trainable, std::uint64_t seed, int chunk_epochs = 1);

// Normalized values of the space's mutable continuous dimensions.
std::vector<double> ContinuousVector(const HyperParamSpace& space, const Assignment& a);

}  // namespace fusion::hpo

#endif  // FUSION_HPO_PB2_H_
