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

// Acceptance checks. Prints one PASS or FAIL line per criterion and exits
// non-zero if any fail. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "fusion/autodiff/parameters.h"
#include "fusion/data/complex.h"
#include "fusion/data/featurize.h"
#include "fusion/data/rng.h"
#include "fusion/data/split.h"
#include "fusion/eval/aggregate.h"
#include "fusion/eval/classify.h"
#include "fusion/eval/metrics.h"
#include "fusion/hpo/pb2.h"
#include "fusion/hpo/quadratic.h"
#include "fusion/models/fusion_model.h"
#include "fusion/models/trainer.h"
#include "fusion/screen/campaign.h"
#include "fusion/screen/library.h"
#include "fusion/screen/report.h"
#include "fusion/screen/scorer.h"
#include "support/oracles.h"
#include "support/toy.h"

namespace fusion {
namespace {

namespace fs = std::filesystem;
using models::FusionConfig;
using models::FusionModel;
using models::ModelMode;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

// 1. Central-difference gradient check of every model mode.
Outcome GradientFidelity() {
  double worst = 0.0;
  int configs = 0;
  for (ModelMode mode : {ModelMode::kVoxel, ModelMode::kGraph, ModelMode::kMid,
                         ModelMode::kCoherent}) {
    for (std::uint64_t v = 0; v < 20; ++v) {
      FusionModel m(testing::GradientToyConfig(mode, v), 100 + v);
      // Frozen heads are checked too.
      for (const auto& [name, p] : m.params().entries()) {
        if (!p.buffer) m.params().at(name).trainable = true;
      }
      worst = std::max(worst, testing::ModelGradientError(m, testing::GradientToyItems(3, 700 + v)));
      ++configs;
    }
  }
  return {worst < 1e-4, Format("max relative error %.3g over %d configurations (limit 1e-4)",
                               worst, configs)};
}

// 2. Late fusion is the exact mean; mid training freezes heads; coherent
// training moves them.
Outcome FusionSemantics() {
  const auto train = testing::ToyData(96, 10000);
  const auto val = testing::ToyData(24, 20000);
  int late_ok = 0, mid_ok = 0, coherent_ok = 0;
  double min_delta = INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    FusionConfig cfg = testing::ToyConfig(ModelMode::kVoxel);
    cfg.epochs = 1;
    FusionModel voxel(cfg, seed);
    models::Train(voxel, train, val, seed);
    cfg.mode = ModelMode::kGraph;
    FusionModel graph(cfg, seed + 50);
    models::Train(graph, train, val, seed);

    cfg.mode = ModelMode::kLate;
    FusionModel late(cfg, seed);
    late.LoadVoxelHead(voxel);
    late.LoadGraphHead(graph);
    bool exact = true;
    for (const auto& item : val) {
      const double a = voxel.PredictOne(item), b = graph.PredictOne(item);
      exact &= late.PredictOne(item) == (a + b) / 2 && models::LateFusionPredict(a, b) == (a + b) / 2;
    }
    late_ok += exact;

    cfg.mode = ModelMode::kMid;
    cfg.epochs = 2;
    FusionModel mid(cfg, seed);
    mid.LoadVoxelHead(voxel);
    mid.LoadGraphHead(graph);
    const autodiff::ParameterStore mid_before = mid.params();
    models::Train(mid, train, val, seed);
    mid_ok += autodiff::ParameterStore::SquaredDistance(mid_before, mid.params(), "voxel/") == 0.0 &&
              autodiff::ParameterStore::SquaredDistance(mid_before, mid.params(), "graph/") == 0.0 &&
              mid.Fingerprint(FusionModel::kVoxelPrefix) == voxel.Fingerprint(FusionModel::kVoxelPrefix) &&
              mid.Fingerprint(FusionModel::kGraphPrefix) == graph.Fingerprint(FusionModel::kGraphPrefix);

    cfg.mode = ModelMode::kCoherent;
    cfg.pre_trained = true;
    FusionModel coherent(cfg, seed);
    coherent.LoadVoxelHead(voxel);
    coherent.LoadGraphHead(graph);
    const autodiff::ParameterStore before = coherent.params();
    models::Train(coherent, train, val, seed);
    const double delta = std::min(
        autodiff::ParameterStore::SquaredDistance(before, coherent.params(), "voxel/"),
        autodiff::ParameterStore::SquaredDistance(before, coherent.params(), "graph/"));
    min_delta = std::min(min_delta, std::sqrt(delta));
    coherent_ok += delta > 0.0;
  }
  return {late_ok == 10 && mid_ok == 10 && coherent_ok == 10,
          Format("late exact %d/10, mid heads bitwise frozen %d/10, coherent heads moved %d/10 "
                 "(min L2 delta %.3g)",
                 late_ok, mid_ok, coherent_ok, min_delta)};
}

// 3. Coherent fusion learns the planted signal.
Outcome LearningSignal() {
  const FusionConfig cfg = models::DeskConfig(ModelMode::kCoherent);
  data::GenerationParams gp;
  gp.noise_sigma = 0.1;
  std::vector<data::FeaturizedComplex> all;
  std::vector<data::LabeledItem> labels;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    all.push_back(data::Featurize(data::GenerateComplex(MixSeed(31, i), gp),
                                  models::FeaturizerFor(cfg)));
    labels.push_back({all.back().id, all.back().label});
  }
  const auto split = data::QuintileSplit(labels, 0.1, 31);
  std::vector<data::FeaturizedComplex> train, val;
  for (std::size_t i : split.train) train.push_back(all[i]);
  for (std::size_t i : split.validation) val.push_back(all[i]);

  int good = 0;
  double min_r2 = INFINITY, max_r2 = -INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    FusionModel m(cfg, seed);
    const double untrained = models::EvaluateMse(m, val);
    models::Train(m, train, val, seed);
    std::vector<double> pred, actual;
    for (const auto& item : val) {
      pred.push_back(m.PredictOne(item));
      actual.push_back(item.label);
    }
    const auto r = eval::RegressionMetrics(pred, actual);
    const double r2 = r.r2.value_or(-INFINITY);
    min_r2 = std::min(min_r2, r2);
    max_r2 = std::max(max_r2, r2);
    good += r2 > 0.3 && r.rmse * r.rmse < untrained;
  }
  return {good >= 9, Format("%d/10 seeds with R2 > 0.3 and MSE below untrained (R2 %.3f..%.3f, "
                            "%zu train / %zu validation, %d epochs)",
                            good, min_r2, max_r2, train.size(), val.size(), cfg.epochs)};
}

// 4. Quintile-stratified holdout sizes.
Outcome SplitFidelity() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> pk(6.4, 2.1);
  std::vector<data::LabeledItem> items(17362);
  for (std::size_t i = 0; i < items.size(); ++i) {
    items[i] = {Format("item%05zu", i), std::round(pk(rng) * 100) / 100};
  }
  const auto s = data::QuintileSplit(items, 0.10, 4);
  double worst = 0.0;
  for (std::size_t q = 0; q < s.bucket_sizes.size(); ++q) {
    worst = std::max(worst, std::abs(static_cast<double>(s.bucket_holdout[q]) -
                                     0.10 * static_cast<double>(s.bucket_sizes[q])));
  }
  std::set<std::size_t> seen(s.train.begin(), s.train.end());
  seen.insert(s.validation.begin(), s.validation.end());
  const bool partition = seen.size() == items.size() &&
                         s.train.size() + s.validation.size() == items.size();
  const std::size_t v = s.validation.size();
  return {v >= 1731 && v <= 1737 && worst <= 1.0 && partition,
          Format("%zu train / %zu validation, max per-quintile deviation %.2f, partition %s",
                 s.train.size(), v, worst, partition ? "exact" : "broken")};
}

// Records a fingerprint of every checkpoint the trainable produces.
class RecordingTrainable : public hpo::Trainable {
 public:
  std::string Init(const hpo::Assignment& config, std::uint64_t seed) override {
    return Remember(inner_.Init(config, seed));
  }
  Result Train(const std::string& checkpoint, const hpo::Assignment& config, int epochs,
               std::uint64_t seed) override {
    Result r = inner_.Train(checkpoint, config, epochs, seed);
    Remember(r.checkpoint);
    return r;
  }
  bool Produced(std::uint64_t h) const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_.count(h) > 0;
  }

 private:
  std::string Remember(std::string ckpt) {
    std::lock_guard<std::mutex> lock(mu_);
    seen_.insert(Fnv1a(ckpt));
    return ckpt;
  }
  hpo::QuadraticTrainable inner_;
  mutable std::mutex mu_;
  std::unordered_set<std::uint64_t> seen_;
};

// 5. PB2 against random search on the drifting quadratic.
Outcome Pb2Efficacy() {
  const hpo::HyperParamSpace space = hpo::QuadraticSpace();
  hpo::Pb2Config pb2;
  pb2.population_size = 8;
  pb2.perturbation_interval = 5;
  const int budget = 10 * pb2.perturbation_interval;
  std::vector<double> pb2_best, random_best;
  int exploits = 0, clones_ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RecordingTrainable t;
    const auto r = hpo::RunHpo(space, pb2, budget, t, seed);
    pb2_best.push_back(r.best_score);
    for (const auto& ev : r.history) {
      if (ev.value("event", "") != "exploit") continue;
      ++exploits;
      const std::uint64_t h = ev.at("checkpoint_fnv1a");
      clones_ok += h == ev.at("donor_checkpoint_fnv1a").get<std::uint64_t>() && t.Produced(h);
    }
    hpo::QuadraticTrainable plain;
    random_best.push_back(
        hpo::RandomSearch(space, pb2.population_size, budget, plain, seed).best_score);
  }
  const double a = Median(pb2_best), b = Median(random_best);
  return {a <= b && exploits > 0 && clones_ok == exploits,
          Format("median best %.5f (PB2) vs %.5f (random search) over 10 seeds; %d/%d exploit "
                 "clones bitwise equal to donor checkpoints",
                 a, b, clones_ok, exploits)};
}

// 6. Exactly-once output under job failures and corrupt records.
Outcome ScreeningExactlyOnce() {
  const auto library = screen::GenerateLibrary(10000, {"target"}, 10, 6);
  const screen::SyntheticScorer scorer;
  const fs::path root = fs::temp_directory_path() / "fusion_acceptance_screen";
  int clean = 0, failed_attempts = 0, missing_jobs = 0;
  std::size_t corrupt_total = 0;
  std::string first_problem;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    screen::FaultPlan faults;
    faults.record_corruption_rate = 0.001;
    faults.job_failure_rate = 0.05;
    faults.seed = seed;
    screen::CampaignConfig c;
    c.n_jobs = 10;
    c.ranks_per_job = 4;
    c.loaders_per_rank = 2;
    c.max_retries = 3;
    c.out_dir = root;
    fs::remove_all(root);
    const auto result = screen::RunCampaign(library, c, scorer, faults);
    for (const auto& a : result.attempts) failed_attempts += !a.ok;
    missing_jobs += static_cast<int>(result.missing.size());

    // Expected ids: library minus corrupt records minus ranges given up on.
    std::set<std::size_t> missing_index;
    for (const auto& m : result.missing) {
      for (std::size_t i = m.poses.begin; i < m.poses.end; ++i) missing_index.insert(i);
    }
    std::set<screen::PoseKey> expected, corrupt;
    for (std::size_t i = 0; i < library.size(); ++i) {
      if (missing_index.count(i)) continue;
      (faults.CorruptRecord(library[i].key) ? corrupt : expected).insert(library[i].key);
    }
    corrupt_total += corrupt.size();
    std::vector<screen::PoseKey> got;
    for (const auto& r : screen::ReadCampaignOutput(root)) got.push_back(r.key());
    const std::set<screen::PoseKey> got_set(got.begin(), got.end());
    std::set<screen::PoseKey> logged;
    for (const auto& e : result.errors) logged.insert(e.key);

    // Only directories of successful attempts may exist.
    std::set<std::string> dirs, expected_dirs;
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory()) dirs.insert(e.path().filename().string());
    }
    for (const auto& a : result.attempts) {
      if (a.ok) expected_dirs.insert(screen::JobDirectoryName(a.job_id));
    }
    const bool ok = got.size() == got_set.size() && got_set == expected && logged == corrupt &&
                    dirs == expected_dirs;
    clean += ok;
    if (!ok && first_problem.empty()) {
      first_problem = Format("; seed %llu: %zu records (%zu unique, %zu expected), %zu logged "
                             "vs %zu corrupt, %zu dirs vs %zu",
                             static_cast<unsigned long long>(seed), got.size(), got_set.size(),
                             expected.size(), logged.size(), corrupt.size(), dirs.size(),
                             expected_dirs.size());
    }
  }
  fs::remove_all(root);
  return {clean == 20 && failed_attempts > 0,
          Format("%d/20 campaigns exact (100000 poses each; %d failed attempts retried, %zu "
                 "corrupt records logged, %d jobs abandoned)",
                 clean, failed_attempts, corrupt_total, missing_jobs) +
              first_problem};
}

// 7. Strong scaling with a fixed per-pose cost.
Outcome StrongScaling() {
  const auto library = screen::GenerateLibrary(240, {"target"}, 10, 7);
  const screen::SyntheticScorer scorer(0.001);
  const auto rows = screen::ScalingExperiment(library, {1, 2, 4}, {12, 56}, 3, scorer);
  std::map<std::pair<int, std::size_t>, double> t;
  for (const auto& r : rows) t[{r.worker_groups, r.batch_size}] = r.mean_seconds;
  double worst_ratio = 0.0, worst_batch = 0.0;
  for (std::size_t b : {12u, 56u}) worst_ratio = std::max(worst_ratio, t[{4, b}] / t[{1, b}]);
  for (int g : {1, 2, 4}) {
    const double a = t[{g, 12}], b = t[{g, 56}];
    worst_batch = std::max(worst_batch, std::abs(a - b) / std::max(a, b));
  }
  return {worst_ratio <= 0.35 && worst_batch <= 0.15,
          Format("4-group / 1-group evaluation time %.3f (limit 0.35); batch 12 vs 56 differ by "
                 "%.1f%% (limit 15%%); 1 group %.2f s, 4 groups %.2f s",
                 worst_ratio, 100 * worst_batch, t[{1, 56}], t[{4, 56}])};
}

// 8. Rate identities, and the documented inconsistency in the reference rate.
Outcome ThroughputIdentities() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.001, 500.0);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto r = screen::MakeThroughputReport(u(rng), u(rng), u(rng), rng() % 1000000,
                                                1.0 + static_cast<double>(rng() % 40));
    exact += r.poses_per_hour == 3600.0 * r.poses_per_second &&
             r.compounds_per_hour == r.poses_per_hour / r.poses_per_compound;
  }
  const auto ref = screen::FromPosesPerSecond(108.0, 10.0);
  std::ifstream readme(FUSION_README_PATH);
  std::stringstream text;
  text << readme.rdbuf();
  const bool documented = text.str().find("338,800") != std::string::npos &&
                          text.str().find("388,800") != std::string::npos;
  return {exact == 1000 && ref.poses_per_hour == 388800.0 && ref.compounds_per_hour == 38880.0 &&
              documented,
          Format("%d/1000 random reports exact; 108 poses/s gives %.0f poses/h and %.0f "
                 "compounds/h; 338,800 vs 388,800 discrepancy %s in README",
                 exact, ref.poses_per_hour, ref.compounds_per_hour,
                 documented ? "flagged" : "NOT flagged")};
}

// 9. Metrics against brute-force references.
Outcome MetricOracles() {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  auto track = [&](long double a, long double b) {
    worst = std::max(worst, static_cast<double>(std::abs(a - b)));
  };
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 300;
    std::normal_distribution<double> g(5.0, 2.0);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = t % 2 ? std::round(g(rng)) : g(rng);
      y[i] = t % 2 ? std::round(g(rng)) : g(rng);
    }
    const auto r = eval::RegressionMetrics(x, y);
    const auto o = testing::OracleErrors(x, y);
    track(r.rmse, o.rmse);
    track(r.mae, o.mae);
    if (o.r2) track(*r.r2, *o.r2);
    if (r.pearson) track(*r.pearson, testing::OraclePearson(x, y));
    if (r.spearman) {
      track(*r.spearman,
            testing::OraclePearson(testing::OracleRanks(x), testing::OracleRanks(y)));
    }

    std::vector<double> s(n);
    std::vector<bool> lab(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 25);
      lab[i] = rng() % 3 == 0;
      pred[i] = rng() % 2 == 0;
    }
    lab[0] = true;
    lab[1] = false;
    const auto curve = eval::ComputePrCurve(s, lab);
    double best = 0.0;
    for (const auto& p : curve.points) {
      const auto o2 = testing::OracleAtThreshold(s, lab, p.threshold);
      track(p.precision, o2.precision);
      track(p.recall, o2.recall);
      track(p.f1, o2.f1);
    }
    for (double th : std::set<double>(s.begin(), s.end())) {
      best = std::max(best, testing::OracleAtThreshold(s, lab, th).f1);
    }
    track(curve.f1_best, best);
    const auto k = eval::Confusion(pred, lab);
    const auto ok = testing::OracleCohen(pred, lab);
    track(k.rho_o, ok.rho_o);
    track(k.rho_e, ok.rho_e);
    if (ok.kappa) track(*k.kappa, *ok.kappa);
  }
  std::bernoulli_distribution truth(0.3), guess(0.3);
  std::vector<bool> p(10000), a(10000);
  for (std::size_t i = 0; i < p.size(); ++i) {
    a[i] = truth(rng);
    p[i] = guess(rng);
  }
  const double kappa = *eval::Confusion(p, a).kappa;
  return {worst <= 1e-12 && std::abs(kappa) < 0.05,
          Format("max deviation %.3g over 100 instances (limit 1e-12); random-classifier kappa "
                 "%.4f at n=10000 (limit 0.05)",
                 worst, kappa)};
}

// 10. Best-pose aggregation against an exhaustive search.
Outcome Aggregation() {
  std::mt19937_64 rng(10);
  int matched = 0, total = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<screen::PredictionRecord> records;
    const int compounds = 1 + static_cast<int>(rng() % 20);
    for (int c = 0; c < compounds; ++c) {
      for (const char* target : {"protease", "spike"}) {
        std::vector<int> poses(10);
        std::iota(poses.begin(), poses.end(), 0);
        std::shuffle(poses.begin(), poses.end(), rng);
        const int k = static_cast<int>(rng() % 11);
        for (int i = 0; i < k; ++i) {
          screen::PredictionRecord r;
          r.compound_id = Format("c%03d", c);
          r.target_id = target;
          r.pose_id = poses[static_cast<std::size_t>(i)];
          r.predicted_pk = static_cast<double>(rng() % 9) - 4.0;
          records.push_back(r);
        }
      }
    }
    std::shuffle(records.begin(), records.end(), rng);
    for (eval::Direction d : {eval::Direction::kHigherIsStronger, eval::Direction::kLowerIsStronger}) {
      ++total;
      const auto got = eval::AggregateBestPose(records, d);
      const auto want =
          testing::OracleBestPoses(records, d == eval::Direction::kHigherIsStronger);
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i) {
        same = got[i].compound_id == want[i].compound && got[i].target_id == want[i].target &&
               got[i].pose_id == want[i].pose && got[i].score == want[i].score;
      }
      matched += same;
    }
  }
  return {matched == total,
          Format("%d/%d randomized instances identical to exhaustive search (both directions)",
                 matched, total)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace fusion

int main(int argc, char** argv) {
  using namespace fusion;
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", GradientFidelity},
      {2, "fusion semantics", FusionSemantics},
      {3, "learning signal", LearningSignal},
      {4, "split fidelity", SplitFidelity},
      {5, "PB2 efficacy", Pb2Efficacy},
      {6, "screening exactly-once", ScreeningExactlyOnce},
      {7, "strong scaling", StrongScaling},
      {8, "throughput identities", ThroughputIdentities},
      {9, "metric oracles", MetricOracles},
      {10, "best-pose aggregation", Aggregation},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
