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

#include "fusion/models/trainer.h"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fusion/autodiff/checkpoint.h"
#include "fusion/data/rng.h"
#include "json.hpp"

namespace fusion::models {

using autodiff::DenseArray;
using autodiff::Mode;
using autodiff::ValueGraph;

namespace {

constexpr std::size_t kEvalBatch = 64;
constexpr std::size_t kCalibrationItems = 256;

std::vector<const data::FeaturizedComplex*> Pointers(
    std::span<const data::FeaturizedComplex> items, std::size_t begin, std::size_t end) {
  std::vector<const data::FeaturizedComplex*> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(&items[i]);
  return out;
}

void CheckTrainable(const FusionModel& model) {
  const FusionConfig& c = model.config();
  switch (c.mode) {
    case ModelMode::kLate:
      throw std::invalid_argument("late fusion has no trainable parameters; train the heads");
    case ModelMode::kMid:
      if (!model.voxel_loaded() || !model.graph_loaded()) {
        throw std::invalid_argument("mid-level fusion requires trained 3d and sg checkpoints");
      }
      break;
    case ModelMode::kCoherent:
      if (c.pre_trained && (!model.voxel_loaded() || !model.graph_loaded())) {
        throw std::invalid_argument(
            "pre-trained coherent fusion requires trained 3d and sg checkpoints");
      }
      break;
    default: break;
  }
}

}  // namespace

double EvaluateMse(const FusionModel& model, std::span<const data::FeaturizedComplex> items) {
  if (items.empty()) throw std::invalid_argument("evaluate: empty dataset");
  double total = 0;
  for (std::size_t begin = 0; begin < items.size(); begin += kEvalBatch) {
    const std::size_t end = std::min(items.size(), begin + kEvalBatch);
    const auto batch = Pointers(items, begin, end);
    const auto preds = model.PredictBatch(std::span<const data::FeaturizedComplex* const>(batch));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (!preds[i].value) throw std::invalid_argument("evaluate: " + preds[i].error);
      const double d = *preds[i].value - batch[i]->label;
      total += d * d;
    }
  }
  return total / static_cast<double>(items.size());
}

Trainer::Trainer(FusionModel* model, std::uint64_t seed)
    : model_(model),
      seed_(seed),
      optimizer_(model->config().optimizer),
      batch_size_(model->config().batch_size) {
  CheckTrainable(*model_);
  model_->ApplyTrainability();
}

void Trainer::CalibrateOutputBias(std::span<const data::FeaturizedComplex> train) {
  if (train.empty()) return;
  const std::size_t n = std::min(train.size(), kCalibrationItems);
  double pred_sum = 0, label_sum = 0;
  const auto preds = model_->PredictBatch(train.subspan(0, n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!preds[i].value) throw std::invalid_argument("calibrate: " + preds[i].error);
    pred_sum += *preds[i].value;
    label_sum += train[i].label;
  }
  const double shift = (label_sum - pred_sum) / static_cast<double>(n);
  // Late fusion averages two biases; shifting both by the same amount moves
  // the mean by exactly `shift`.
  for (const std::string& name : model_->OutputBiasNames()) {
    auto& p = model_->params().at(name);
    if (!p.trainable) continue;
    p.value[0] += shift;
  }
}

double Trainer::RunEpoch(std::span<const data::FeaturizedComplex> train) {
  if (train.empty()) throw std::invalid_argument("train: empty training set");
  const FusionConfig& c = model_->config();
  ++epoch_;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(MixSeed(seed_, 0x45504f4348ULL + static_cast<std::uint64_t>(epoch_)));
  std::shuffle(order.begin(), order.end(), rng);

  const bool augment = c.mode != ModelMode::kGraph && c.rotation_probability > 0;
  const auto batch = static_cast<std::size_t>(batch_size_);
  double total = 0;
  for (std::size_t begin = 0, b = 0; begin < order.size(); begin += batch, ++b) {
    const std::size_t end = std::min(order.size(), begin + batch);
    std::vector<data::VoxelGrid> rotated;
    rotated.reserve(end - begin);
    std::vector<const data::VoxelGrid*> grids;
    std::vector<const data::ComplexGraph*> graphs;
    DenseArray target({end - begin, 1});
    for (std::size_t k = begin; k < end; ++k) {
      const data::FeaturizedComplex& item = train[order[k]];
      if (augment) {
        const std::uint64_t s = MixSeed(MixSeed(seed_, static_cast<std::uint64_t>(epoch_)), k);
        rotated.push_back(data::RotateAugment(item.grid, s, c.rotation_probability));
        grids.push_back(&rotated.back());
      } else {
        grids.push_back(&item.grid);
      }
      graphs.push_back(&item.graph);
      target[k - begin] = item.label;
    }
    const std::uint64_t graph_seed =
        MixSeed(MixSeed(seed_, 0x44524f50ULL + static_cast<std::uint64_t>(epoch_)), b);
    ValueGraph g(&model_->params(), graph_seed);
    const auto pred = model_->Forward(g, grids, graphs, Mode::kTrain);
    const auto loss = g.MseLoss(pred, g.Input(std::move(target)));
    total += g.value(loss).item() * static_cast<double>(end - begin);
    optimizer_.Step(model_->params(), g.Backward(loss));
  }
  return total / static_cast<double>(train.size());
}

void Trainer::SetOptimizer(const autodiff::OptimizerConfig& config) {
  config.Validate();
  autodiff::Optimizer next(config);
  if (config.kind == optimizer_.config().kind) {
    next.Restore(optimizer_.step_count(), optimizer_.slots());
  }
  optimizer_ = std::move(next);
}

void Trainer::SetBatchSize(int batch_size) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  batch_size_ = batch_size;
}

std::string Trainer::SaveState() const {
  autodiff::Checkpoint ck;
  ck.params = model_->params();
  ck.optimizer = autodiff::OptimizerState::Capture(optimizer_);
  ck.metadata = nlohmann::json{{"epoch", epoch_}, {"batch_size", batch_size_}}.dump();
  return autodiff::SerializeCheckpoint(ck);
}

void Trainer::LoadState(std::string_view bytes) {
  autodiff::Checkpoint ck = autodiff::DeserializeCheckpoint(bytes);
  auto& store = model_->params();
  if (ck.params.size() != store.size()) {
    throw std::invalid_argument("trainer state does not match the model layout");
  }
  for (const auto& [name, p] : ck.params.entries()) {
    if (!store.Contains(name) || store.at(name).value.shape() != p.value.shape()) {
      throw std::invalid_argument("trainer state does not match the model at " + name);
    }
  }
  for (const auto& [name, p] : ck.params.entries()) store.at(name).value = p.value;
  if (!ck.optimizer) throw std::invalid_argument("trainer state lacks optimizer state");
  optimizer_ = ck.optimizer->Rebuild();
  const auto meta = nlohmann::json::parse(ck.metadata);
  epoch_ = meta.at("epoch").get<int>();
  batch_size_ = meta.at("batch_size").get<int>();
}

TrainingHistory Train(FusionModel& model, std::span<const data::FeaturizedComplex> train,
                      std::span<const data::FeaturizedComplex> val, std::uint64_t seed) {
  Trainer trainer(&model, seed);
  trainer.CalibrateOutputBias(train);
  TrainingHistory h;
  h.initial_val_mse = EvaluateMse(model, val);
  h.best_val_mse = h.initial_val_mse;
  autodiff::ParameterStore best = model.params();
  for (int e = 0; e < model.config().epochs; ++e) {
    EpochRecord r;
    r.train_mse = trainer.RunEpoch(train);
    r.epoch = trainer.epoch();
    r.val_mse = EvaluateMse(model, val);
    h.epochs.push_back(r);
    if (r.val_mse < h.best_val_mse) {
      h.best_val_mse = r.val_mse;
      h.best_epoch = r.epoch;
      best = model.params();
    }
  }
  for (const auto& [name, p] : best.entries()) model.params().at(name).value = p.value;
  return h;
}

}  // namespace fusion::models
