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

#ifndef FUSION_MODELS_TRAINER_H_
#define FUSION_MODELS_TRAINER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fusion/autodiff/optimizer.h"
#include "fusion/data/featurize.h"
#include "fusion/models/fusion_model.h"

namespace fusion::models {

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainingHistory {
  double initial_val_mse = 0.0;
  std::vector<EpochRecord> epochs;
  // 0 means the untrained model was never beaten.
  int best_epoch = 0;
  double best_val_mse = 0.0;
};

// Eval-mode mean squared error over a dataset.
double EvaluateMse(const FusionModel& model, std::span<const data::FeaturizedComplex> items);

// Minibatch MSE training of one model. Owns the optimizer state, so an
// interrupted run can be serialized and resumed exactly.
class Trainer {
 public:
  // Rejects late fusion (nothing to train), mid fusion without both loaded
  // heads, and pre-trained coherent fusion without both loaded heads.
  Trainer(FusionModel* model, std::uint64_t seed);

  // Shifts the output bias so the mean prediction on (a prefix of) the
  // training set equals the mean label. Called once before the first epoch of
  // a freshly initialized model.
  void CalibrateOutputBias(std::span<const data::FeaturizedComplex> train);

  // One pass over `train` in a seeded shuffled order; returns the mean
  // per-item training loss.
  double RunEpoch(std::span<const data::FeaturizedComplex> train);

  int epoch() const { return epoch_; }
  const autodiff::Optimizer& optimizer() const { return optimizer_; }

  // Swaps in new optimizer hyperparameters. Accumulated moments are kept when
  // the optimizer kind is unchanged and dropped otherwise.
  void SetOptimizer(const autodiff::OptimizerConfig& config);
  void SetBatchSize(int batch_size);
  int batch_size() const { return batch_size_; }

  // Parameters, optimizer state and epoch counter as checkpoint bytes.
  std::string SaveState() const;
  void LoadState(std::string_view bytes);

 private:
  FusionModel* model_;
  std::uint64_t seed_;
  autodiff::Optimizer optimizer_;
  int batch_size_;
  int epoch_ = 0;
};

// Runs config.epochs epochs, evaluating on `val` after each, and leaves the
// model holding the parameters with the lowest validation MSE (including the
// untrained starting point).
TrainingHistory Train(FusionModel& model, std::span<const data::FeaturizedComplex> train,
                      std::span<const data::FeaturizedComplex> val, std::uint64_t seed);

}  // namespace fusion::models

#endif  // FUSION_MODELS_TRAINER_H_
