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

// Command-line entry point: gen, train, hpo, screen, eval and report.
//
// Every command writes <out>/run_manifest.json describing its configuration,
// inputs and outputs. Wall-clock figures go to <out>/timings.json so the
// remaining artifacts can be compared byte for byte across reruns.
//
// Exit codes: 0 success, 1 usage error, 2 stage failure, 3 completed with
// missing ranges.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fusion/data/complex.h"
#include "fusion/data/featurize.h"
#include "fusion/data/manifest.h"
#include "fusion/data/rng.h"
#include "fusion/data/split.h"
#include "fusion/eval/aggregate.h"
#include "fusion/eval/compare.h"
#include "fusion/eval/metrics.h"
#include "fusion/hpo/model_trainable.h"
#include "fusion/hpo/pb2.h"
#include "fusion/hpo/quadratic.h"
#include "fusion/hpo/space.h"
#include "fusion/models/fusion_model.h"
#include "fusion/models/model_io.h"
#include "fusion/models/trainer.h"
#include "fusion/screen/campaign.h"
#include "fusion/screen/library.h"
#include "fusion/screen/scorer.h"
#include "json.hpp"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kUsage = 1, kStageFailure = 2, kMissingRanges = 3 };

// Thrown for configuration problems found after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string Hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string FileHash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  std::ostringstream ss;
  ss << in.rdbuf();
  return Hex(fusion::Fnv1a(ss.str()));
}

void WriteJsonFile(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json ReadJsonFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

// Collects what a command read and wrote, then writes the run manifest.
class RunRecord {
 public:
  RunRecord(std::string command, json config, std::uint64_t seed, json argv)
      : command_(std::move(command)),
        config_(std::move(config)),
        seed_(seed),
        argv_(std::move(argv)) {}

  void Input(const fs::path& p) { inputs_.push_back(p); }
  void Output(const fs::path& p) { outputs_.push_back(p); }
  void Timing(const std::string& key, json value) { timings_[key] = std::move(value); }

  void Write(const fs::path& out_dir, const std::string& status, int exit_code,
             const std::string& error) const {
    json inputs = json::array(), outputs = json::array();
    for (const fs::path& p : inputs_) {
      inputs.push_back({{"path", p.string()}, {"fnv1a", FileHash(p)}});
    }
    for (const fs::path& p : outputs_) {
      outputs.push_back({{"path", p.string()}, {"fnv1a", FileHash(p)}});
    }
    json manifest = {{"command", command_},
                     {"argv", argv_},
                     {"version", kVersion},
                     {"seed", seed_},
                     {"config", config_},
                     {"config_hash", Hex(fusion::Fnv1a(config_.dump()))},
                     {"inputs", inputs},
                     {"outputs", outputs},
                     {"status", status},
                     {"exit_code", exit_code}};
    if (!error.empty()) manifest["error"] = error;
    fs::create_directories(out_dir);
    WriteJsonFile(out_dir / "run_manifest.json", manifest);
    if (!timings_.empty()) WriteJsonFile(out_dir / "timings.json", timings_);
  }

 private:
  std::string command_;
  json config_;
  std::uint64_t seed_;
  json argv_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
  json timings_ = json::object();
};

class Stopwatch {
 public:
  double Seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::size_t count = 1000;
  std::uint64_t seed = 0;
  double holdout = 0.1;
  double sigma = 0.25;
  std::size_t library_compounds = 0;
  std::string targets = "protease1,protease2,spike1,spike2";
  int poses = 10;
  double vina_noise = 1.0;
  std::string out;
};

// Percent inhibition of a competitive binder at 1 uM for a given pK.
double PercentInhibition(double pk) { return 100.0 / (1.0 + std::pow(10.0, 6.0 - pk)); }

int RunGen(const GenOptions& o, RunRecord& run) {
  const fs::path out(o.out);
  fs::create_directories(out);
  Stopwatch clock;
  fusion::data::GenerationParams params;
  params.noise_sigma = o.sigma;
  std::vector<fusion::data::DatasetEntry> entries;
  std::vector<fusion::data::LabeledItem> labels;
  for (std::size_t i = 0; i < o.count; ++i) {
    entries.push_back({fusion::data::GenerateComplex(fusion::MixSeed(o.seed, i), params),
                       fusion::data::SplitTag::kTrain});
    labels.push_back({entries.back().complex.id, entries.back().complex.label_pk});
  }
  if (o.count > 0) {
    const auto split = fusion::data::QuintileSplit(labels, o.holdout, o.seed);
    for (std::size_t i : split.validation) entries[i].split = fusion::data::SplitTag::kValidation;
    spdlog::info("gen: {} complexes, {} train / {} validation", o.count, split.train.size(),
                 split.validation.size());
    fusion::data::WriteDatasetManifest(out / "dataset.jsonl", entries);
    run.Output(out / "dataset.jsonl");
  }
  if (o.library_compounds > 0) {
    const auto targets = SplitList(o.targets);
    const auto library = fusion::screen::GenerateLibrary(o.library_compounds, targets, o.poses,
                                                         fusion::MixSeed(o.seed, 0x4c4942));
    fusion::screen::WriteLibrary(out / "library.jsonl", library);
    run.Output(out / "library.jsonl");
    // Synthetic assay: the strongest planted affinity over a compound's poses
    // gives pK and percent inhibition; a noisy docking-style energy is added
    // as an external lower-is-stronger method.
    std::ofstream assay(out / "assay.csv");
    assay << "compound_id,target_id,pk,vina\n";
    assay.precision(17);
    std::mt19937_64 rng(fusion::MixSeed(o.seed, 0x56494e41));
    std::normal_distribution<double> noise(0.0, o.vina_noise);
    std::ofstream inhibition(out / "inhibition.csv");
    inhibition << "compound_id,target_id,percent_inhibition,vina\n";
    inhibition.precision(17);
    for (std::size_t i = 0; i < library.size(); i += static_cast<std::size_t>(o.poses)) {
      double best = -1.0;
      for (int p = 0; p < o.poses; ++p) {
        const auto c = fusion::data::GenerateComplex(library[i + p].seed, params);
        best = std::max(best, fusion::data::PlantedAffinity(c.atoms));
      }
      const double vina = -(0.9 * best + noise(rng));
      const auto& key = library[i].key;
      assay << key.compound_id << ',' << key.target_id << ',' << best << ',' << vina << '\n';
      inhibition << key.compound_id << ',' << key.target_id << ',' << PercentInhibition(best)
                 << ',' << vina << '\n';
    }
    if (!assay || !inhibition) throw std::runtime_error("cannot write assay tables");
    run.Output(out / "assay.csv");
    run.Output(out / "inhibition.csv");
  }
  run.Timing("total_seconds", clock.Seconds());
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::string data;
  std::string mode = "coherent";
  std::string preset = "desk";
  std::string model_config;
  std::optional<int> epochs;
  std::optional<int> batch;
  std::optional<double> lr;
  std::uint64_t seed = 0;
  std::string voxel_model;
  std::string graph_model;
  std::string out;
};

fusion::models::FusionConfig ResolveConfig(const std::string& preset, const std::string& mode_name,
                                           const std::string& config_path) {
  const auto mode = fusion::models::ParseModelMode(mode_name);
  fusion::models::FusionConfig c;
  if (preset == "desk") {
    c = fusion::models::DeskConfig(mode);
  } else if (preset == "reference") {
    switch (mode) {
      case fusion::models::ModelMode::kVoxel: c = fusion::models::ReferenceVoxelConfig(); break;
      case fusion::models::ModelMode::kGraph: c = fusion::models::ReferenceGraphConfig(); break;
      case fusion::models::ModelMode::kMid: c = fusion::models::ReferenceMidConfig(); break;
      default: c = fusion::models::ReferenceCoherentConfig(); break;
    }
    c.mode = mode;
  } else {
    throw UsageError("unknown preset '" + preset + "' (desk|reference)");
  }
  if (!config_path.empty()) {
    // A config file overlays the preset; keys it omits keep preset values.
    json base = fusion::models::ToJson(c);
    base.merge_patch(ReadJsonFile(config_path));
    c = fusion::models::FusionConfigFromJson(base);
  }
  return c;
}

struct Dataset {
  std::vector<fusion::data::FeaturizedComplex> train;
  std::vector<fusion::data::FeaturizedComplex> val;
};

Dataset LoadDataset(const fs::path& path, const fusion::data::FeaturizerConfig& featurizer) {
  Dataset d;
  for (const auto& e : fusion::data::ReadDatasetManifest(path)) {
    auto item = fusion::data::Featurize(e.complex, featurizer);
    if (e.split == fusion::data::SplitTag::kValidation) d.val.push_back(std::move(item));
    else if (e.split == fusion::data::SplitTag::kTrain) d.train.push_back(std::move(item));
  }
  if (d.train.empty() || d.val.empty()) {
    throw std::runtime_error(path.string() + ": needs train and validation items");
  }
  return d;
}

int RunTrain(const TrainOptions& o, RunRecord& run) {
  const fs::path out(o.out);
  fs::create_directories(out);
  Stopwatch clock;
  auto cfg = ResolveConfig(o.preset, o.mode, o.model_config);
  if (o.epochs) cfg.epochs = *o.epochs;
  if (o.batch) cfg.batch_size = *o.batch;
  if (o.lr) cfg.optimizer.learning_rate = *o.lr;
  cfg.Validate();
  run.Input(o.data);
  if (!o.model_config.empty()) run.Input(o.model_config);

  fusion::models::FusionModel model(cfg, o.seed);
  const bool needs_heads = cfg.mode == fusion::models::ModelMode::kMid ||
                           cfg.mode == fusion::models::ModelMode::kLate ||
                           (cfg.mode == fusion::models::ModelMode::kCoherent && cfg.pre_trained);
  if (needs_heads) {
    if (o.voxel_model.empty() || o.graph_model.empty()) {
      throw UsageError("mode " + o.mode + " needs --voxel-model and --graph-model");
    }
    model.LoadVoxelHead(fusion::models::LoadModel(o.voxel_model));
    model.LoadGraphHead(fusion::models::LoadModel(o.graph_model));
    run.Input(o.voxel_model);
    run.Input(o.graph_model);
  }
  const Dataset data = LoadDataset(o.data, fusion::models::FeaturizerFor(cfg));
  spdlog::info("train: mode {}, {} train / {} validation items", o.mode, data.train.size(),
               data.val.size());
  json history = json::object();
  if (cfg.mode != fusion::models::ModelMode::kLate) {
    const auto h = fusion::models::Train(model, data.train, data.val, o.seed);
    json epochs = json::array();
    for (const auto& e : h.epochs) {
      epochs.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
      spdlog::info("train: epoch {} train mse {:.4f} val mse {:.4f}", e.epoch, e.train_mse,
                   e.val_mse);
    }
    history = {{"initial_val_mse", h.initial_val_mse},
               {"best_epoch", h.best_epoch},
               {"best_val_mse", h.best_val_mse},
               {"epochs", epochs}};
  }
  std::vector<double> pred, actual;
  for (const auto& item : data.val) {
    pred.push_back(model.PredictOne(item));
    actual.push_back(item.label);
  }
  const json metrics = {{"validation", fusion::eval::ToJson(fusion::eval::RegressionMetrics(pred, actual))},
                        {"mode", o.mode}};
  fusion::models::SaveModel(out / "model.ckpt", model);
  WriteJsonFile(out / "history.json", history);
  WriteJsonFile(out / "metrics.json", metrics);
  for (const char* f : {"model.ckpt", "model.ckpt.json", "history.json", "metrics.json"}) {
    run.Output(out / f);
  }
  run.Timing("total_seconds", clock.Seconds());
  return kOk;
}

// ---------------------------------------------------------------- hpo

struct HpoOptions {
  std::string space;
  std::string preset_space;
  std::string objective = "model";
  std::string data;
  std::string mode = "sg";
  std::string preset = "desk";
  std::string model_config;
  std::size_t population = 8;
  int budget = 20;
  int interval = 5;
  double quantile = 0.5;
  int workers = 1;
  std::uint64_t seed = 0;
  std::string voxel_model;
  std::string graph_model;
  std::string out;
};

int RunHpoCommand(const HpoOptions& o, RunRecord& run) {
  const fs::path out(o.out);
  fs::create_directories(out);
  Stopwatch clock;
  fusion::hpo::Pb2Config pb2;
  pb2.population_size = o.population;
  pb2.perturbation_interval = o.interval;
  pb2.quantile_fraction = o.quantile;
  pb2.workers = o.workers;
  pb2.Validate();

  std::unique_ptr<fusion::hpo::Trainable> trainable;
  fusion::hpo::HyperParamSpace space;
  Dataset data;
  std::optional<fusion::models::FusionModel> voxel, graph;
  if (o.objective == "quadratic") {
    space = fusion::hpo::QuadraticSpace();
    trainable = std::make_unique<fusion::hpo::QuadraticTrainable>();
  } else if (o.objective == "model") {
    if (o.data.empty()) throw UsageError("hpo --objective model needs --data");
    if (!o.space.empty()) {
      space = fusion::hpo::HyperParamSpace::Load(o.space);
      run.Input(o.space);
    } else {
      space = fusion::hpo::PresetSpace(o.preset_space.empty() ? o.mode : o.preset_space);
    }
    const auto base = ResolveConfig(o.preset, o.mode, o.model_config);
    // Build graphs at the widest cutoffs so searched thresholds can only
    // remove edges.
    auto featurizer = fusion::models::FeaturizerFor(base);
    featurizer.covalent_threshold = fusion::data::kMaxNeighborThreshold;
    featurizer.noncovalent_threshold = fusion::data::kMaxNeighborThreshold;
    data = LoadDataset(o.data, featurizer);
    run.Input(o.data);
    if (!o.voxel_model.empty()) voxel.emplace(fusion::models::LoadModel(o.voxel_model));
    if (!o.graph_model.empty()) graph.emplace(fusion::models::LoadModel(o.graph_model));
    trainable = std::make_unique<fusion::hpo::ModelTrainable>(
        base, data.train, data.val, voxel ? &*voxel : nullptr, graph ? &*graph : nullptr);
  } else {
    throw UsageError("unknown objective '" + o.objective + "' (model|quadratic)");
  }
  std::ofstream log(out / "hpo_log.jsonl");
  const auto result = fusion::hpo::RunHpo(space, pb2, o.budget, *trainable, o.seed, &log);
  log.close();
  spdlog::info("hpo: best score {:.6g} from trial {}", result.best_score, result.best.trial_id);
  WriteJsonFile(out / "space.json", space.ToJson());
  WriteJsonFile(out / "best.json", {{"trial", result.best.trial_id},
                                    {"epoch", result.best.epoch},
                                    {"score", result.best_score},
                                    {"config", result.best.config}});
  {
    std::ofstream ckpt(out / "best_state.bin", std::ios::binary);
    ckpt.write(result.best.checkpoint.data(),
               static_cast<std::streamsize>(result.best.checkpoint.size()));
  }
  for (const char* f : {"hpo_log.jsonl", "space.json", "best.json", "best_state.bin"}) {
    run.Output(out / f);
  }
  run.Timing("total_seconds", clock.Seconds());
  return kOk;
}

// ---------------------------------------------------------------- screen

struct ScreenOptions {
  std::string model;
  double synthetic_cost_ms = -1.0;
  std::string library;
  int jobs = 1;
  int ranks = 16;
  std::size_t batch = 56;
  int loaders = 12;
  int parallelism = 1;
  int retries = 3;
  std::string faults;
  double sigma = 0.25;
  std::string out;
};

int RunScreen(const ScreenOptions& o, RunRecord& run) {
  const fs::path out(o.out);
  const auto library = fusion::screen::ReadLibrary(o.library);
  run.Input(o.library);
  fusion::screen::FaultPlan faults;
  if (!o.faults.empty()) {
    faults = fusion::screen::FaultPlanFromJson(ReadJsonFile(o.faults));
    run.Input(o.faults);
  }
  std::optional<fusion::models::FusionModel> model;
  std::unique_ptr<fusion::screen::Scorer> scorer;
  if (!o.model.empty()) {
    model.emplace(fusion::models::LoadModel(o.model));
    run.Input(o.model);
    fusion::data::GenerationParams gen;
    gen.noise_sigma = o.sigma;
    scorer = std::make_unique<fusion::screen::ModelScorer>(
        &*model, gen, fusion::models::FeaturizerFor(model->config()));
  } else if (o.synthetic_cost_ms >= 0.0) {
    scorer = std::make_unique<fusion::screen::SyntheticScorer>(o.synthetic_cost_ms / 1000.0);
  } else {
    throw UsageError("screen needs --model or --synthetic-cost-ms");
  }
  fusion::screen::CampaignConfig c;
  c.n_jobs = o.jobs;
  c.ranks_per_job = o.ranks;
  c.batch_size = o.batch;
  c.loaders_per_rank = o.loaders;
  c.parallelism = o.parallelism;
  c.max_retries = o.retries;
  c.out_dir = out / "campaign";
  try {
    c.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto result = fusion::screen::RunCampaign(library, c, *scorer, faults);
  const auto& rep = result.report;
  spdlog::info("screen: {} scored, {} errors, {} missing, {} failed attempts", rep.scored_poses,
               rep.error_poses, rep.missing_poses, rep.failed_attempts);
  for (const char* f : {"manifest.json", "errors.jsonl", "missing_ranges.json"}) {
    run.Output(c.out_dir / f);
  }
  run.Timing("wall_seconds", rep.wall_seconds);
  run.Timing("mean_job", fusion::screen::ToJson(rep.mean_job));
  return result.missing.empty() ? kOk : kMissingRanges;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  std::string predictions;
  std::string experimental;
  std::string method_name = "fusion";
  std::vector<std::string> directions;
  double positive_above = 33.0;
  double correlation_min = 1.0;
  std::optional<double> rmsd_cutoff;
  std::string out;
};

int RunEval(const EvalOptions& o, RunRecord& run) {
  const fs::path out(o.out);
  fs::create_directories(out);
  std::map<std::string, fusion::eval::Direction> directions;
  for (const std::string& d : o.directions) {
    const auto eq = d.find('=');
    if (eq == std::string::npos) throw UsageError("--direction expects NAME=higher|lower");
    directions[d.substr(0, eq)] = fusion::eval::ParseDirection(d.substr(eq + 1));
  }
  fs::path pred_dir(o.predictions);
  if (fs::exists(pred_dir / "campaign" / "manifest.json")) pred_dir /= "campaign";
  const auto records = fusion::screen::ReadCampaignOutput(pred_dir);
  run.Input(pred_dir / "manifest.json");
  const auto table = fusion::eval::ReadExperimentalTable(o.experimental, directions);
  run.Input(o.experimental);
  const auto best =
      fusion::eval::AggregateBestPose(records, fusion::eval::Direction::kHigherIsStronger);
  std::vector<fusion::eval::MethodScores> methods = {fusion::eval::FromBestPoses(
      o.method_name, best, fusion::eval::Direction::kHigherIsStronger)};
  // Restrict the screen to assayed compounds.
  std::map<fusion::eval::CompoundTarget, double> assayed;
  for (const auto& row : table.rows) {
    const auto it = methods[0].scores.find({row.compound_id, row.target_id});
    if (it != methods[0].scores.end()) assayed.insert(*it);
  }
  methods[0].scores = std::move(assayed);
  methods.insert(methods.end(), table.external.begin(), table.external.end());
  fusion::eval::ComparisonThresholds th;
  th.positive_above = o.positive_above;
  th.correlation_min = o.correlation_min;
  th.rmsd_cutoff = o.rmsd_cutoff;
  const auto report = fusion::eval::CompareMethods(methods, table.rows, th);
  fusion::eval::WriteComparisonReport(out, report, methods, table.rows);
  {
    std::ofstream bp(out / "best_poses.csv");
    bp.precision(17);
    bp << "compound_id,target_id,pose_id,score\n";
    for (const auto& b : best) {
      bp << b.compound_id << ',' << b.target_id << ',' << b.pose_id << ',' << b.score << '\n';
    }
  }
  for (const char* f :
       {"report.json", "correlation.csv", "pr_curves.csv", "scatter.csv", "best_poses.csv"}) {
    run.Output(out / f);
  }
  for (const auto& row : report.rows) {
    spdlog::info("eval: {} {} pearson {} spearman {}", row.method, row.target,
                 row.pearson ? std::to_string(*row.pearson) : "NA",
                 row.spearman ? std::to_string(*row.spearman) : "NA");
  }
  return kOk;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::vector<std::string> runs;
  std::string out;
};

std::string Fmt(const json& v) {
  if (v.is_null()) return "NA";
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v.get<double>());
    return buf;
  }
  return v.dump();
}

int RunReport(const ReportOptions& o, RunRecord& run) {
  std::ostringstream md;
  md << "# Run report\n";
  for (const std::string& r : o.runs) {
    const fs::path dir(r);
    const json manifest = ReadJsonFile(dir / "run_manifest.json");
    run.Input(dir / "run_manifest.json");
    const std::string command = manifest.at("command");
    md << "\n## " << command << " (" << dir.string() << ")\n\n";
    md << "- status: " << manifest.at("status").get<std::string>() << "\n";
    md << "- seed: " << manifest.at("seed") << ", config hash " << manifest.at("config_hash").get<std::string>() << "\n";
    if (command == "train" && fs::exists(dir / "metrics.json")) {
      const json m = ReadJsonFile(dir / "metrics.json").at("validation");
      md << "\n| RMSE | MAE | R2 | Pearson R | Spearman R |\n|---|---|---|---|---|\n";
      md << "| " << Fmt(m.at("rmse")) << " | " << Fmt(m.at("mae")) << " | " << Fmt(m.at("r2"))
         << " | " << Fmt(m.at("pearson")) << " | " << Fmt(m.at("spearman")) << " |\n";
    } else if (command == "hpo" && fs::exists(dir / "best.json")) {
      const json b = ReadJsonFile(dir / "best.json");
      md << "- best score " << Fmt(b.at("score")) << " (trial " << b.at("trial") << ", epoch "
         << b.at("epoch") << ")\n- best config `" << b.at("config").dump() << "`\n";
    } else if (command == "screen" && fs::exists(dir / "campaign" / "manifest.json")) {
      const json s = ReadJsonFile(dir / "campaign" / "manifest.json").at("summary");
      md << "- poses: " << s.at("input_poses") << " in, " << s.at("scored_poses") << " scored, "
         << s.at("error_poses") << " logged errors, " << s.at("missing_poses") << " missing\n";
      if (fs::exists(dir / "campaign" / "timings.json")) {
        const json t = ReadJsonFile(dir / "campaign" / "timings.json").at("mean_job");
        md << "\n| Avg. Startup (s) | Avg. Evaluation (s) | Avg. File Output (s) | Poses per sec. "
              "| Poses per hour | Compounds per hour |\n|---|---|---|---|---|---|\n";
        md << "| " << Fmt(t.at("startup_seconds")) << " | " << Fmt(t.at("evaluation_seconds"))
           << " | " << Fmt(t.at("output_seconds")) << " | " << Fmt(t.at("poses_per_second"))
           << " | " << Fmt(t.at("poses_per_hour")) << " | " << Fmt(t.at("compounds_per_hour"))
           << " |\n";
      }
    } else if (command == "eval" && fs::exists(dir / "report.json")) {
      const json rep = ReadJsonFile(dir / "report.json");
      md << "\n| Method | Target | Pearson | Spearman | F1 (best) | F1 (top-P) | kappa |\n"
            "|---|---|---|---|---|---|---|\n";
      for (const json& row : rep.at("rows")) {
        const json& pr = row.at("pr");
        const json& cm = row.at("confusion");
        md << "| " << row.at("method").get<std::string>() << " | "
           << row.at("target").get<std::string>() << " | " << Fmt(row.at("pearson")) << " | "
           << Fmt(row.at("spearman")) << " | " << (pr.is_null() ? "NA" : Fmt(pr.at("f1_best")))
           << " | " << (pr.is_null() ? "NA" : Fmt(pr.at("f1_top"))) << " | "
           << (cm.is_null() ? "NA" : Fmt(cm.at("kappa"))) << " |\n";
      }
    }
  }
  const fs::path out(o.out);
  fs::create_directories(out);
  std::ofstream(out / "report.md") << md.str();
  run.Output(out / "report.md");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("fusion"));
  CLI::App app{"Fusion binding-affinity models: data, training, HPO, screening and evaluation"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "TOML file with one section per command");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate synthetic complexes, a pose library and an assay");
  gen_cmd->add_option("--count", gen.count, "Complexes in the training dataset");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--holdout", gen.holdout, "Validation fraction (quintile-stratified)");
  gen_cmd->add_option("--sigma", gen.sigma, "Label noise, pK units");
  gen_cmd->add_option("--library-compounds", gen.library_compounds,
                      "Compounds in the pose library (0 skips the library)");
  gen_cmd->add_option("--targets", gen.targets, "Comma-separated target ids");
  gen_cmd->add_option("--poses", gen.poses, "Poses per compound and target")->check(CLI::Range(1, 10));
  gen_cmd->add_option("--out", gen.out)->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a generated dataset");
  train_cmd->add_option("--data", train.data, "dataset.jsonl")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--mode", train.mode, "3d|sg|late|mid|coherent");
  train_cmd->add_option("--preset", train.preset, "desk|reference");
  train_cmd->add_option("--model-config", train.model_config, "JSON overlay on the preset")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--batch", train.batch);
  train_cmd->add_option("--lr", train.lr);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--voxel-model", train.voxel_model)->check(CLI::ExistingFile);
  train_cmd->add_option("--graph-model", train.graph_model)->check(CLI::ExistingFile);
  train_cmd->add_option("--out", train.out)->required();

  HpoOptions hpo;
  auto* hpo_cmd = app.add_subcommand("hpo", "Population-based bandit hyperparameter search");
  hpo_cmd->add_option("--space", hpo.space, "Search-space JSON")->check(CLI::ExistingFile);
  hpo_cmd->add_option("--preset-space", hpo.preset_space, "3d|sg|fusion");
  hpo_cmd->add_option("--objective", hpo.objective, "model|quadratic");
  hpo_cmd->add_option("--data", hpo.data)->check(CLI::ExistingFile);
  hpo_cmd->add_option("--mode", hpo.mode);
  hpo_cmd->add_option("--preset", hpo.preset);
  hpo_cmd->add_option("--model-config", hpo.model_config)->check(CLI::ExistingFile);
  hpo_cmd->add_option("--population", hpo.population);
  hpo_cmd->add_option("--budget", hpo.budget, "Epochs per trial");
  hpo_cmd->add_option("--interval", hpo.interval, "Epochs between exploit/explore steps");
  hpo_cmd->add_option("--quantile", hpo.quantile);
  hpo_cmd->add_option("--workers", hpo.workers);
  hpo_cmd->add_option("--seed", hpo.seed);
  hpo_cmd->add_option("--voxel-model", hpo.voxel_model)->check(CLI::ExistingFile);
  hpo_cmd->add_option("--graph-model", hpo.graph_model)->check(CLI::ExistingFile);
  hpo_cmd->add_option("--out", hpo.out)->required();

  ScreenOptions screen;
  auto* screen_cmd = app.add_subcommand("screen", "Score a pose library in fault-tolerant jobs");
  screen_cmd->add_option("--model", screen.model)->check(CLI::ExistingFile);
  screen_cmd->add_option("--synthetic-cost-ms", screen.synthetic_cost_ms,
                         "Use a fixed-cost stand-in scorer instead of a model");
  screen_cmd->add_option("--library", screen.library)->required()->check(CLI::ExistingFile);
  screen_cmd->add_option("--jobs", screen.jobs);
  screen_cmd->add_option("--ranks", screen.ranks);
  screen_cmd->add_option("--batch", screen.batch);
  screen_cmd->add_option("--loaders", screen.loaders);
  screen_cmd->add_option("--parallelism", screen.parallelism, "Jobs running at once");
  screen_cmd->add_option("--retries", screen.retries);
  screen_cmd->add_option("--faults", screen.faults, "Fault plan JSON")->check(CLI::ExistingFile);
  screen_cmd->add_option("--sigma", screen.sigma, "Generation noise used to rebuild poses");
  screen_cmd->add_option("--out", screen.out)->required();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare screening output with experimental values");
  eval_cmd->add_option("--predictions", ev.predictions, "Screen output directory")->required();
  eval_cmd->add_option("--experimental", ev.experimental, "CSV/TSV table")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--method-name", ev.method_name);
  eval_cmd->add_option("--direction", ev.directions, "NAME=higher|lower for table score columns");
  eval_cmd->add_option("--positive-above", ev.positive_above);
  eval_cmd->add_option("--correlation-min", ev.correlation_min);
  eval_cmd->add_option("--rmsd-cutoff", ev.rmsd_cutoff);
  eval_cmd->add_option("--out", ev.out)->required();

  ReportOptions rep;
  auto* report_cmd = app.add_subcommand("report", "Summarize run directories as markdown");
  report_cmd->add_option("--runs", rep.runs)->required();
  report_cmd->add_option("--out", rep.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  auto* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  json config = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_name() == "--help") continue;
    if (opt->count() == 0) {
      if (!opt->get_default_str().empty()) config[opt->get_name()] = opt->get_default_str();
      continue;
    }
    const auto results = opt->results();
    config[opt->get_name()] = results.size() == 1 ? json(results[0]) : json(results);
  }
  json argv_json = json::array();
  for (int i = 0; i < argc; ++i) argv_json.push_back(argv[i]);
  std::uint64_t seed = 0;
  std::string out;
  if (name == "gen") seed = gen.seed, out = gen.out;
  else if (name == "train") seed = train.seed, out = train.out;
  else if (name == "hpo") seed = hpo.seed, out = hpo.out;
  else if (name == "screen") out = screen.out;
  else if (name == "eval") out = ev.out;
  else out = rep.out;

  RunRecord run(name, config, seed, argv_json);
  int code = kOk;
  std::string error;
  try {
    if (name == "gen") code = RunGen(gen, run);
    else if (name == "train") code = RunTrain(train, run);
    else if (name == "hpo") code = RunHpoCommand(hpo, run);
    else if (name == "screen") code = RunScreen(screen, run);
    else if (name == "eval") code = RunEval(ev, run);
    else code = RunReport(rep, run);
  } catch (const UsageError& e) {
    spdlog::error("{}: {}", name, e.what());
    std::cerr << cmd->help();
    return kUsage;
  } catch (const std::invalid_argument& e) {
    code = kStageFailure;
    error = e.what();
  } catch (const std::exception& e) {
    code = kStageFailure;
    error = e.what();
  }
  if (!error.empty()) spdlog::error("{}: {}", name, error);
  const std::string status =
      code == kOk ? "complete" : code == kMissingRanges ? "incomplete" : "failed";
  try {
    run.Write(out, status, code, error);
  } catch (const std::exception& e) {
    spdlog::error("cannot write run manifest: {}", e.what());
    if (code == kOk) code = kStageFailure;
  }
  return code;
}
