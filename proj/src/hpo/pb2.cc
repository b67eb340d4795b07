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

#include "fusion/hpo/pb2.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "fusion/data/rng.h"

namespace fusion::hpo {

using nlohmann::json;

void Pb2Config::Validate() const {
  if (population_size < 2) throw std::invalid_argument("pb2: population size must be >= 2");
  if (!(quantile_fraction > 0.0 && quantile_fraction <= 0.5)) {
    throw std::invalid_argument("pb2: quantile fraction must lie in (0, 0.5]");
  }
  if (perturbation_interval < 1) throw std::invalid_argument("pb2: t_ready must be >= 1");
  if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0)) {
    throw std::invalid_argument("pb2: mutation probability must lie in [0, 1]");
  }
  if (!(fallback_scale >= 0.0 && fallback_scale < 1.0)) {
    throw std::invalid_argument("pb2: fallback scale must lie in [0, 1)");
  }
  if (!(ucb_kappa >= 0.0)) throw std::invalid_argument("pb2: kappa must be >= 0");
  if (workers < 1) throw std::invalid_argument("pb2: workers must be >= 1");
}

RankResult ReadyAndRank(const std::vector<TrialReading>& readings, double quantile_fraction) {
  if (readings.empty()) throw std::invalid_argument("ready_and_rank: no trials");
  for (const auto& r : readings) {
    if (r.epoch != readings.front().epoch) {
      throw std::invalid_argument("ready_and_rank: trials are at unequal epochs");
    }
  }
  if (!(quantile_fraction > 0.0 && quantile_fraction <= 0.5)) {
    throw std::invalid_argument("ready_and_rank: quantile fraction must lie in (0, 0.5]");
  }
  std::vector<TrialReading> sorted = readings;
  std::sort(sorted.begin(), sorted.end(), [](const TrialReading& a, const TrialReading& b) {
    return a.score != b.score ? a.score < b.score : a.trial_id < b.trial_id;
  });
  const std::size_t n = sorted.size();
  const double q = quantile_fraction * static_cast<double>(n);
  const auto above = static_cast<std::size_t>(std::floor(q + 1e-9));
  const auto below = std::min(static_cast<std::size_t>(std::ceil(q - 1e-9)), n - above);
  RankResult r;
  for (std::size_t i = 0; i < above; ++i) r.above.push_back(sorted[i].trial_id);
  for (std::size_t i = n - below; i < n; ++i) r.below.push_back(sorted[i].trial_id);
  return r;
}

void RunLog::Append(json record) {
  if (out_ != nullptr) *out_ << record.dump() << '\n' << std::flush;
  records_.push_back(std::move(record));
}

std::vector<double> ContinuousVector(const HyperParamSpace& space, const Assignment& a) {
  std::vector<double> x;
  for (const Dimension& d : space.dimensions()) {
    if (d.kind == DimKind::kContinuous && d.mutable_after_init) {
      x.push_back(std::clamp(d.Normalize(a.at(d.name).get<double>()), 0.0, 1.0));
    }
  }
  return x;
}

void ExploitExplore(TrialState& target, const TrialState& donor, const HyperParamSpace& space,
                    const Pb2Config& pb2, TimeVaryingGp* gp, double time_index,
                    std::mt19937_64& rng) {
  const Assignment old_config = target.config;
  target.checkpoint = donor.checkpoint;
  target.epoch = donor.epoch;
  target.previous_score = donor.previous_score;
  target.interval_score = donor.interval_score;
  target.failed = false;
  target.failure.clear();

  Assignment next = donor.config;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const Dimension& d : space.dimensions()) {
    if (!d.mutable_after_init || d.kind == DimKind::kContinuous) continue;
    if (unit(rng) < pb2.mutation_probability) {
      std::mt19937_64 draw(rng());
      next[d.name] = HyperParamSpace({d}).Sample(draw).at(d.name);
    }
  }

  std::vector<const Dimension*> cont;
  for (const Dimension& d : space.dimensions()) {
    if (d.kind == DimKind::kContinuous && d.mutable_after_init) cont.push_back(&d);
  }
  if (!cont.empty()) {
    if (gp != nullptr && gp->fitted()) {
      const std::vector<double> x =
          MaximizeUcb(*gp, time_index, pb2.ucb_kappa, ContinuousVector(space, donor.config), rng);
      for (std::size_t i = 0; i < cont.size(); ++i) next[cont[i]->name] = cont[i]->Denormalize(x[i]);
      gp->AddHallucination(x, time_index);
    } else if (pb2.fallback_perturbation) {
      std::uniform_real_distribution<double> factor(1.0 - pb2.fallback_scale,
                                                    1.0 + pb2.fallback_scale);
      for (const Dimension* d : cont) {
        const double v = donor.config.at(d->name).get<double>() * factor(rng);
        next[d->name] = std::clamp(v, d->low, d->high);
      }
    }
  }
  target.lineage.push_back({target.epoch, donor.trial_id, old_config, next});
  target.config = std::move(next);
}

namespace {

void TrainGeneration(std::vector<TrialState>& trials, Trainable& trainable, int epochs,
                     std::uint64_t seed, int generation, int workers) {
  auto run = [&](TrialState& t) {
    if (t.failed) return;
    t.interval_config = t.config;
    try {
      Trainable::Result r = trainable.Train(
          t.checkpoint, t.config, epochs,
          MixSeed(MixSeed(seed, static_cast<std::uint64_t>(generation)), t.trial_id));
      if (r.scores.size() != static_cast<std::size_t>(epochs)) {
        throw std::runtime_error("trainable returned " + std::to_string(r.scores.size()) +
                                 " scores for " + std::to_string(epochs) + " epochs");
      }
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < r.scores.size(); ++e) {
        if (!std::isfinite(r.scores[e])) throw std::runtime_error("non-finite score");
        t.score_history.push_back({t.epoch + static_cast<int>(e) + 1, r.scores[e]});
        best = std::min(best, r.scores[e]);
      }
      t.checkpoint = std::move(r.checkpoint);
      t.epoch += epochs;
      t.interval_score = best;
    } catch (const std::exception& e) {
      t.failed = true;
      t.failure = e.what();
      t.epoch += epochs;
      t.interval_score.reset();
    }
  };
  if (workers <= 1) {
    for (auto& t : trials) run(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < trials.size();) run(trials[i]);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

HpoResult RunHpo(const HyperParamSpace& space, const Pb2Config& pb2, int budget_epochs,
                 Trainable& trainable, std::uint64_t seed, std::ostream* log) {
  pb2.Validate();
  if (budget_epochs < pb2.perturbation_interval) {
    throw std::invalid_argument("pb2: budget must cover at least one perturbation interval");
  }
  RunLog runlog(log);
  HpoResult result;
  result.initial_configs = SampleInitialPopulation(space, pb2.population_size, seed);
  std::vector<TrialState> trials(pb2.population_size);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    TrialState& t = trials[i];
    t.trial_id = static_cast<int>(i);
    t.config = result.initial_configs[i];
    t.checkpoint = trainable.Init(t.config, MixSeed(seed, 0x494e4954ULL + i));
    runlog.Append({{"event", "init"}, {"trial", t.trial_id}, {"config", t.config}});
  }

  TimeVaryingGp gp;
  std::mt19937_64 rng(MixSeed(seed, 0x50423245ULL));
  const bool has_continuous = !ContinuousVector(space, trials[0].config).empty();
  const int generations =
      (budget_epochs + pb2.perturbation_interval - 1) / pb2.perturbation_interval;
  for (int gen = 0; gen < generations; ++gen) {
    const int epochs = std::min(pb2.perturbation_interval,
                                budget_epochs - gen * pb2.perturbation_interval);
    TrainGeneration(trials, trainable, epochs, seed, gen, pb2.workers);

    for (TrialState& t : trials) {
      if (t.failed) {
        runlog.Append({{"event", "failure"},
                       {"trial", t.trial_id},
                       {"epoch", t.epoch},
                       {"error", t.failure}});
        continue;
      }
      for (std::size_t k = t.score_history.size() - epochs; k < t.score_history.size(); ++k) {
        runlog.Append({{"event", "score"},
                       {"trial", t.trial_id},
                       {"epoch", t.score_history[k].epoch},
                       {"score", t.score_history[k].score}});
      }
      if (*t.interval_score < result.best_score) {
        result.best_score = *t.interval_score;
        result.best = t;
      }
      if (has_continuous && t.previous_score) {
        gp.Add({ContinuousVector(space, t.interval_config), static_cast<double>(gen),
                *t.previous_score - *t.interval_score});
      }
      t.previous_score = t.interval_score;
    }
    if (gen + 1 == generations) break;

    std::vector<TrialReading> readings;
    std::vector<int> replace;
    for (const TrialState& t : trials) {
      if (t.failed) replace.push_back(t.trial_id);
      else readings.push_back({t.trial_id, t.epoch, *t.interval_score});
    }
    if (readings.empty()) throw std::runtime_error("pb2: every trial failed");
    RankResult rank = ReadyAndRank(readings, pb2.quantile_fraction);
    if (rank.above.empty()) rank.above.push_back(
        std::min_element(readings.begin(), readings.end(), [](const auto& a, const auto& b) {
          return a.score != b.score ? a.score < b.score : a.trial_id < b.trial_id;
        })->trial_id);
    replace.insert(replace.begin(), rank.below.begin(), rank.below.end());
    if (has_continuous) gp.Fit();
    const std::vector<TrialState> snapshot = trials;
    for (int id : replace) {
      const int donor = rank.above[std::uniform_int_distribution<std::size_t>(
          0, rank.above.size() - 1)(rng)];
      TrialState& target = trials[static_cast<std::size_t>(id)];
      ExploitExplore(target, snapshot[static_cast<std::size_t>(donor)], space, pb2,
                     has_continuous ? &gp : nullptr, static_cast<double>(gen + 1), rng);
      const LineageEvent& ev = target.lineage.back();
      runlog.Append({{"event", "exploit"},
                     {"trial", id},
                     {"from", donor},
                     {"epoch", ev.epoch},
                     {"old_config", ev.old_config},
                     {"new_config", ev.new_config},
                     {"checkpoint_bytes", target.checkpoint.size()},
                     {"checkpoint_fnv1a", Fnv1a(target.checkpoint)},
                     {"donor_checkpoint_fnv1a",
                      Fnv1a(snapshot[static_cast<std::size_t>(donor)].checkpoint)}});
    }
  }
  if (!std::isfinite(result.best_score)) throw std::runtime_error("pb2: no trial produced a score");
  result.population = std::move(trials);
  result.history = runlog.records();
  return result;
}

HpoResult RandomSearch(const HyperParamSpace& space, std::size_t population, int budget_epochs,
                       Trainable& trainable, std::uint64_t seed, int chunk_epochs) {
  if (budget_epochs < 1 || chunk_epochs < 1) {
    throw std::invalid_argument("random search: budget and chunk must be positive");
  }
  HpoResult result;
  result.initial_configs = SampleInitialPopulation(space, population, seed);
  for (std::size_t i = 0; i < population; ++i) {
    TrialState t;
    t.trial_id = static_cast<int>(i);
    t.config = result.initial_configs[i];
    t.checkpoint = trainable.Init(t.config, MixSeed(seed, 0x494e4954ULL + i));
    for (int done = 0, gen = 0; done < budget_epochs; ++gen) {
      const int epochs = std::min(chunk_epochs, budget_epochs - done);
      try {
        auto r = trainable.Train(t.checkpoint, t.config, epochs,
                                 MixSeed(MixSeed(seed, static_cast<std::uint64_t>(gen)), i));
        t.checkpoint = std::move(r.checkpoint);
        for (double s : r.scores) {
          t.score_history.push_back({++t.epoch, s});
          if (s < result.best_score) {
            result.best_score = s;
            result.best = t;
          }
        }
      } catch (const std::exception& e) {
        t.failed = true;
        t.failure = e.what();
        break;
      }
      done += epochs;
    }
    result.population.push_back(std::move(t));
  }
  return result;
}

}  // namespace fusion::hpo
