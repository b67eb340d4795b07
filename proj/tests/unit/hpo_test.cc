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
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "fusion/hpo/gp.h"
#include "fusion/hpo/model_trainable.h"
#include "fusion/hpo/pb2.h"
#include "fusion/hpo/quadratic.h"
#include "fusion/hpo/space.h"
#include "fusion/models/model_io.h"
#include "gtest/gtest.h"
#include "support/toy.h"

namespace fusion::hpo {
namespace {

using nlohmann::json;

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Scores are a fixed function of the configuration; the checkpoint counts epochs.
class ConstantTrainable : public Trainable {
 public:
  std::string Init(const Assignment&, std::uint64_t) override { return "0"; }
  Result Train(const std::string& checkpoint, const Assignment& config, int epochs,
               std::uint64_t) override {
    Result r;
    const int start = std::stoi(checkpoint);
    for (int e = 0; e < epochs; ++e) {
      r.scores.push_back(std::abs(config.at(kQuadraticDimension).get<double>() - 1e-3));
    }
    r.checkpoint = std::to_string(start + epochs);
    return r;
  }
};

TEST(SpaceTest, SampledLearningRatesStayInBounds) {
  for (const char* column : {"3d", "sg", "fusion"}) {
    const HyperParamSpace space = PresetSpace(column);
    const Dimension& lr = space.at("optimizer.learning_rate");
    for (const Assignment& a : SampleInitialPopulation(space, 200, 5)) {
      space.CheckAssignment(a);
      const double v = a.at("optimizer.learning_rate").get<double>();
      EXPECT_GE(v, lr.low);
      EXPECT_LE(v, lr.high);
    }
  }
}

TEST(SpaceTest, DifferentSeedsGiveDifferentPopulations) {
  const HyperParamSpace space = PresetSpace("fusion");
  EXPECT_NE(SampleInitialPopulation(space, 8, 1), SampleInitialPopulation(space, 8, 2));
  EXPECT_EQ(SampleInitialPopulation(space, 8, 1), SampleInitialPopulation(space, 8, 1));
}

TEST(SpaceTest, GraphSpaceKValuesCoverTwoToEight) {
  const HyperParamSpace space = PresetSpace("sg");
  std::set<int> seen;
  for (const Assignment& a : SampleInitialPopulation(space, 90, 11)) {
    for (const char* k : {"graph.k_cov", "graph.k_noncov"}) {
      const int v = a.at(k).get<int>();
      EXPECT_GE(v, 2);
      EXPECT_LE(v, 8);
      seen.insert(v);
    }
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(SpaceTest, LogScaleIsUniformInExponent) {
  const HyperParamSpace space({Dimension::Continuous("x", 1e-6, 1e-2, Scale::kLog)});
  std::vector<double> u;
  for (const Assignment& a : SampleInitialPopulation(space, 4000, 3)) {
    u.push_back(std::log10(a.at("x").get<double>()));
  }
  EXPECT_NEAR(Median(u), -4.0, 0.15);
}

TEST(SpaceTest, PopulationOfOneRejected) {
  EXPECT_THROW(SampleInitialPopulation(PresetSpace("sg"), 1, 0), std::invalid_argument);
}

TEST(SpaceTest, InvalidDimensionsRejected) {
  EXPECT_THROW(HyperParamSpace({Dimension::Continuous("x", 1.0, 1.0, Scale::kLinear)}),
               std::invalid_argument);
  EXPECT_THROW(HyperParamSpace({Dimension::Categorical("c", {})}), std::invalid_argument);
  EXPECT_THROW(HyperParamSpace({Dimension::Boolean("b"), Dimension::Boolean("b")}),
               std::invalid_argument);
}

TEST(SpaceTest, JsonRoundTrip) {
  for (const char* column : {"3d", "sg", "fusion"}) {
    const HyperParamSpace space = PresetSpace(column);
    const json j = space.ToJson();
    EXPECT_EQ(HyperParamSpace::FromJson(json::parse(j.dump())).ToJson(), j);
  }
}

TEST(SpaceTest, AssignmentOverlaysModelConfig) {
  const models::FusionConfig base = fusion::testing::ToyConfig(models::ModelMode::kGraph);
  const json applied = ApplyAssignment(
      models::ToJson(base),
      {{"graph.k_cov", 5}, {"optimizer.kind", "rmsprop"}, {"optimizer.learning_rate", 0.01}});
  const models::FusionConfig cfg = models::FusionConfigFromJson(applied);
  EXPECT_EQ(cfg.graph.k_cov, 5);
  EXPECT_EQ(cfg.optimizer.kind, autodiff::OptimizerKind::kRmsProp);
  EXPECT_EQ(cfg.optimizer.learning_rate, 0.01);
  EXPECT_EQ(cfg.graph.k_noncov, base.graph.k_noncov);
}

TEST(RankTest, FourTrials) {
  const RankResult r = ReadyAndRank({{0, 5, 1.0}, {1, 5, 2.0}, {2, 5, 3.0}, {3, 5, 4.0}}, 0.5);
  EXPECT_EQ(r.above, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.below, (std::vector<int>{2, 3}));
}

TEST(RankTest, TwoTrialsSplitOneEach) {
  const RankResult r = ReadyAndRank({{0, 5, 9.0}, {1, 5, 3.0}}, 0.5);
  EXPECT_EQ(r.above, (std::vector<int>{1}));
  EXPECT_EQ(r.below, (std::vector<int>{0}));
}

TEST(RankTest, TiesBrokenByTrialId) {
  const RankResult r = ReadyAndRank({{3, 5, 1.0}, {1, 5, 1.0}, {2, 5, 1.0}, {0, 5, 1.0}}, 0.5);
  EXPECT_EQ(r.above, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.below, (std::vector<int>{2, 3}));
}

TEST(RankTest, SmallFractionLeavesMiddle) {
  std::vector<TrialReading> readings;
  for (int i = 0; i < 10; ++i) readings.push_back({i, 5, static_cast<double>(i)});
  const RankResult r = ReadyAndRank(readings, 0.25);
  EXPECT_EQ(r.above, (std::vector<int>{0, 1}));
  EXPECT_EQ(r.below, (std::vector<int>{7, 8, 9}));
}

TEST(RankTest, UnequalEpochsRejected) {
  EXPECT_THROW(ReadyAndRank({{0, 5, 1.0}, {1, 10, 2.0}}, 0.5), std::invalid_argument);
}

TEST(ExploitTest, FallbackStaysInBoundsAndNearDonor) {
  const HyperParamSpace space = QuadraticSpace();
  const Dimension& d = space.at(kQuadraticDimension);
  Pb2Config pb2;
  std::mt19937_64 rng(4);
  for (double v : {d.low, 2e-5, 1e-3, d.high}) {
    TrialState donor;
    donor.trial_id = 1;
    donor.config = {{kQuadraticDimension, v}};
    for (int i = 0; i < 200; ++i) {
      TrialState target;
      ExploitExplore(target, donor, space, pb2, nullptr, 1.0, rng);
      const double got = target.config.at(kQuadraticDimension).get<double>();
      EXPECT_GE(got, d.low);
      EXPECT_LE(got, d.high);
      EXPECT_GE(got, std::max(d.low, 0.8 * v) * (1 - 1e-12));
      EXPECT_LE(got, std::min(d.high, 1.2 * v) * (1 + 1e-12));
    }
  }
}

TEST(ExploitTest, PureExploitIsAnExactClone) {
  const HyperParamSpace space = PresetSpace("fusion");
  Pb2Config pb2;
  pb2.mutation_probability = 0.0;
  pb2.fallback_perturbation = false;
  const auto configs = SampleInitialPopulation(space, 2, 9);
  TrialState donor, target;
  donor.trial_id = 0;
  donor.config = configs[0];
  donor.epoch = 10;
  donor.checkpoint = std::string("\x00\x01\xff payload", 11);
  target.trial_id = 1;
  target.config = configs[1];
  target.checkpoint = "other";
  std::mt19937_64 rng(1);
  ExploitExplore(target, donor, space, pb2, nullptr, 2.0, rng);
  EXPECT_EQ(target.config, donor.config);
  EXPECT_EQ(target.checkpoint, donor.checkpoint);
  EXPECT_EQ(target.epoch, 10);
  ASSERT_EQ(target.lineage.size(), 1u);
  EXPECT_EQ(target.lineage[0].cloned_from, 0);
  EXPECT_EQ(target.lineage[0].old_config, configs[1]);
}

TEST(ExploitTest, StructuralDimensionsNeverChange) {
  const HyperParamSpace space = PresetSpace("fusion");
  Pb2Config pb2;
  pb2.mutation_probability = 1.0;
  std::mt19937_64 rng(2);
  TrialState donor;
  donor.config = SampleInitialPopulation(space, 2, 3)[0];
  for (int i = 0; i < 50; ++i) {
    TrialState target;
    ExploitExplore(target, donor, space, pb2, nullptr, 1.0, rng);
    space.CheckAssignment(target.config);
    for (const Dimension& d : space.dimensions()) {
      if (!d.mutable_after_init) {
        EXPECT_EQ(target.config.at(d.name), donor.config.at(d.name));
      }
    }
  }
}

TEST(ExploitTest, GpProposalsStayInBounds) {
  const HyperParamSpace space = PresetSpace("fusion");
  TimeVaryingGp gp;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t dims = ContinuousVector(space, space.Sample(rng)).size();
  for (int i = 0; i < 20; ++i) {
    std::vector<double> x(dims);
    for (double& v : x) v = unit(rng);
    gp.Add({x, static_cast<double>(i / 4), x[0] - 0.5 * x[1]});
  }
  ASSERT_TRUE(gp.Fit());
  Pb2Config pb2;
  TrialState donor;
  donor.config = space.Sample(rng);
  for (int i = 0; i < 30; ++i) {
    TrialState target;
    ExploitExplore(target, donor, space, pb2, &gp, 5.0, rng);
    space.CheckAssignment(target.config);
  }
}

TEST(GpTest, DegenerateWithFewerThanTwoObservations) {
  TimeVaryingGp gp;
  EXPECT_FALSE(gp.Fit());
  gp.Add({{0.5}, 0.0, 1.0});
  EXPECT_FALSE(gp.Fit());
  gp.Add({{0.1}, 0.0, 0.0});
  EXPECT_TRUE(gp.Fit());
}

TEST(GpTest, InterpolatesSmoothFunction) {
  TimeVaryingGp gp;
  for (int i = 0; i <= 10; ++i) {
    const double x = i / 10.0;
    gp.Add({{x}, 0.0, std::sin(3.0 * x)});
  }
  ASSERT_TRUE(gp.Fit());
  double mean = 0.0, sd = 0.0;
  gp.Predict({0.35}, 0.0, &mean, &sd);
  EXPECT_NEAR(mean, std::sin(1.05), 0.05);
  double far_sd = 0.0;
  gp.Predict({0.35}, 0.0, &mean, &sd);
  gp.Predict({0.35}, 30.0, &mean, &far_sd);
  EXPECT_GE(far_sd, sd);
}

TEST(GpTest, WindowBoundsObservationCount) {
  TimeVaryingGp gp(16);
  for (int i = 0; i < 40; ++i) gp.Add({{i / 40.0}, static_cast<double>(i), 0.0});
  EXPECT_EQ(gp.size(), 16u);
}

TEST(GpTest, UcbPicksHighRegion) {
  TimeVaryingGp gp;
  for (int i = 0; i <= 20; ++i) {
    const double x = i / 20.0;
    gp.Add({{x}, 0.0, -(x - 0.7) * (x - 0.7)});
  }
  ASSERT_TRUE(gp.Fit());
  std::mt19937_64 rng(3);
  const std::vector<double> x = MaximizeUcb(gp, 0.0, 0.0, {0.1}, rng);
  EXPECT_NEAR(x[0], 0.7, 0.05);
}

TEST(RunHpoTest, PopulationOfOneRejected) {
  Pb2Config pb2;
  pb2.population_size = 1;
  QuadraticTrainable q;
  EXPECT_THROW(RunHpo(QuadraticSpace(), pb2, 10, q, 1), std::invalid_argument);
}

TEST(RunHpoTest, ConstantTrainableIsDeterministic) {
  Pb2Config pb2;
  pb2.population_size = 4;
  pb2.perturbation_interval = 3;
  ConstantTrainable c;
  const HpoResult a = RunHpo(QuadraticSpace(), pb2, 12, c, 7);
  const HpoResult b = RunHpo(QuadraticSpace(), pb2, 12, c, 7);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.best_score, b.best_score);
  EXPECT_EQ(a.best.config, b.best.config);
  const HpoResult other = RunHpo(QuadraticSpace(), pb2, 12, c, 8);
  EXPECT_NE(a.history, other.history);
}

TEST(RunHpoTest, QuadraticIsDeterministicIncludingGpAndThreads) {
  Pb2Config pb2;
  pb2.perturbation_interval = 2;
  QuadraticTrainable q;
  const HpoResult a = RunHpo(QuadraticSpace(), pb2, 20, q, 3);
  pb2.workers = 4;
  const HpoResult b = RunHpo(QuadraticSpace(), pb2, 20, q, 3);
  EXPECT_EQ(a.history, b.history);
}

TEST(RunHpoTest, HalfContinuesEachInterval) {
  Pb2Config pb2;
  pb2.population_size = 7;
  pb2.perturbation_interval = 2;
  QuadraticTrainable q;
  const HpoResult r = RunHpo(QuadraticSpace(), pb2, 12, q, 5);
  std::map<int, int> exploits_per_epoch;
  for (const json& ev : r.history) {
    if (ev.at("event") == "exploit") ++exploits_per_epoch[ev.at("epoch").get<int>()];
  }
  ASSERT_EQ(exploits_per_epoch.size(), 5u);
  for (const auto& [epoch, count] : exploits_per_epoch) EXPECT_EQ(7 - count, 3) << epoch;
}

TEST(RunHpoTest, ScoreHistoryEpochsIncreaseAndMatchCheckpoint) {
  Pb2Config pb2;
  pb2.perturbation_interval = 3;
  QuadraticTrainable q;
  const HpoResult r = RunHpo(QuadraticSpace(), pb2, 13, q, 2);
  for (const TrialState& t : r.population) {
    EXPECT_EQ(t.epoch, 13);
    EXPECT_EQ(json::parse(t.checkpoint).at("epoch").get<int>(), 13);
    for (std::size_t i = 1; i < t.score_history.size(); ++i) {
      EXPECT_GT(t.score_history[i].epoch, t.score_history[i - 1].epoch);
    }
  }
}

TEST(RunHpoTest, LineageTracesBackToInitialSamples) {
  const HyperParamSpace space(
      {Dimension::Continuous(kQuadraticDimension, 1e-5, 1e-1, Scale::kLog),
       Dimension::Continuous("tag", 0.0, 1.0, Scale::kLinear, false)});
  Pb2Config pb2;
  pb2.perturbation_interval = 2;
  QuadraticTrainable q;
  const HpoResult r = RunHpo(space, pb2, 20, q, 9);
  std::vector<int> origin(pb2.population_size);
  for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = static_cast<int>(i);
  int exploits = 0;
  for (const json& ev : r.history) {
    if (ev.at("event") != "exploit") continue;
    ++exploits;
    origin[ev.at("trial").get<std::size_t>()] = origin[ev.at("from").get<std::size_t>()];
  }
  EXPECT_GT(exploits, 0);
  for (const TrialState& t : r.population) {
    const Assignment& root = r.initial_configs[static_cast<std::size_t>(origin[t.trial_id])];
    EXPECT_EQ(t.config.at("tag"), root.at("tag"));
  }
}

TEST(RunHpoTest, ClonedCheckpointContinuesTraining) {
  Pb2Config pb2;
  pb2.population_size = 4;
  pb2.perturbation_interval = 2;
  QuadraticTrainable q;
  const HpoResult r = RunHpo(QuadraticSpace(), pb2, 8, q, 4);
  for (const TrialState& t : r.population) {
    if (t.lineage.empty()) continue;
    const auto next = q.Train(t.checkpoint, t.config, 1, 0);
    EXPECT_EQ(json::parse(next.checkpoint).at("epoch").get<int>(), 9);
  }
}

// Throws for configurations whose structural "poison" value exceeds 0.8.
class PoisonedTrainable : public QuadraticTrainable {
 public:
  Result Train(const std::string& checkpoint, const Assignment& config, int epochs,
               std::uint64_t seed) override {
    if (config.at("poison").get<double>() > 0.8) throw std::runtime_error("simulated crash");
    return QuadraticTrainable::Train(checkpoint, config, epochs, seed);
  }
};

TEST(RunHpoTest, CrashedTrialIsReplaced) {
  const HyperParamSpace space(
      {Dimension::Continuous(kQuadraticDimension, 1e-5, 1e-1, Scale::kLog),
       Dimension::Continuous("poison", 0.0, 1.0, Scale::kLinear, false)});
  Pb2Config pb2;
  pb2.perturbation_interval = 2;
  std::uint64_t seed = 0;
  for (;; ++seed) {
    int poisoned = 0;
    for (const auto& a : SampleInitialPopulation(space, pb2.population_size, seed)) {
      poisoned += a.at("poison").get<double>() > 0.8;
    }
    if (poisoned > 0 && poisoned < 4) break;
  }
  PoisonedTrainable p;
  const HpoResult r = RunHpo(space, pb2, 10, p, seed);
  int failures = 0;
  for (const json& ev : r.history) failures += ev.at("event") == "failure";
  EXPECT_GT(failures, 0);
  for (const TrialState& t : r.population) {
    EXPECT_FALSE(t.failed);
    EXPECT_LE(t.config.at("poison").get<double>(), 0.8);
    EXPECT_EQ(t.epoch, 10);
  }
}

TEST(RunHpoTest, ProposalsConcentrateTowardOptimum) {
  const QuadraticObjective objective;
  QuadraticTrainable q(objective);
  const HyperParamSpace space = QuadraticSpace(objective);
  const Dimension& d = space.at(kQuadraticDimension);
  Pb2Config pb2;
  pb2.perturbation_interval = 2;
  const int budget = 20;
  std::vector<double> before, after;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const HpoResult r = RunHpo(space, pb2, budget, q, seed);
    for (const Assignment& a : r.initial_configs) {
      before.push_back(std::abs(d.Normalize(a.at(kQuadraticDimension).get<double>()) - q.Optimum(0)));
    }
    for (const TrialState& t : r.population) {
      after.push_back(std::abs(d.Normalize(t.config.at(kQuadraticDimension).get<double>()) -
                               q.Optimum(budget)));
    }
  }
  EXPECT_LT(Median(after), 0.5 * Median(before));
}

TEST(RunHpoTest, BeatsRandomSearchAtEqualBudget) {
  QuadraticTrainable q;
  Pb2Config pb2;
  pb2.perturbation_interval = 5;
  std::vector<double> pb2_best, random_best;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    pb2_best.push_back(RunHpo(QuadraticSpace(), pb2, 50, q, seed).best_score);
    random_best.push_back(
        RandomSearch(QuadraticSpace(), pb2.population_size, 50, q, seed).best_score);
  }
  EXPECT_LE(Median(pb2_best), Median(random_best));
}

TEST(RunHpoTest, LogStreamsOneJsonObjectPerLine) {
  Pb2Config pb2;
  pb2.population_size = 2;
  pb2.perturbation_interval = 1;
  QuadraticTrainable q;
  std::ostringstream log;
  const HpoResult r = RunHpo(QuadraticSpace(), pb2, 3, q, 1, &log);
  std::istringstream in(log.str());
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line); ++lines) {
    EXPECT_EQ(json::parse(line), r.history[lines]);
  }
  EXPECT_EQ(lines, r.history.size());
}

TEST(ModelTrainableTest, RunsSmallGraphPopulation) {
  const auto train = fusion::testing::ToyData(64, 100);
  const auto val = fusion::testing::ToyData(32, 900);
  models::FusionConfig base = fusion::testing::ToyConfig(models::ModelMode::kGraph);
  ModelTrainable trainable(base, train, val);
  const HyperParamSpace space({Dimension::Continuous("optimizer.learning_rate", 1e-4, 1e-2,
                                                     Scale::kLog),
                               Dimension::Categorical("batch_size", {8, 16})});
  Pb2Config pb2;
  pb2.population_size = 2;
  pb2.perturbation_interval = 1;
  const HpoResult r = RunHpo(space, pb2, 2, trainable, 3);
  EXPECT_TRUE(std::isfinite(r.best_score));
  for (const TrialState& t : r.population) EXPECT_FALSE(t.failed) << t.failure;
  // The best snapshot reloads and reproduces its last score.
  const auto again = trainable.Train(r.best.checkpoint, r.best.config, 0, 0);
  EXPECT_EQ(again.checkpoint.size(), r.best.checkpoint.size());
}

}  // namespace
}  // namespace fusion::hpo
