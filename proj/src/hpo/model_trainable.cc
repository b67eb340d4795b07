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

#include "fusion/hpo/model_trainable.h"

#include "fusion/models/model_io.h"
#include "fusion/models/trainer.h"

namespace fusion::hpo {

ModelTrainable::ModelTrainable(models::FusionConfig base,
                               std::span<const data::FeaturizedComplex> train,
                               std::span<const data::FeaturizedComplex> val,
                               const models::FusionModel* voxel_head,
                               const models::FusionModel* graph_head)
    : base_(std::move(base)),
      train_(train),
      val_(val),
      voxel_head_(voxel_head),
      graph_head_(graph_head) {
  base_.Validate();
}

models::FusionConfig ModelTrainable::Resolve(const Assignment& config) const {
  return models::FusionConfigFromJson(ApplyAssignment(models::ToJson(base_), config));
}

models::FusionModel ModelTrainable::Build(const models::FusionConfig& cfg,
                                          std::uint64_t seed) const {
  models::FusionModel m(cfg, seed);
  const bool wants_heads = cfg.mode == models::ModelMode::kMid ||
                           (cfg.mode == models::ModelMode::kCoherent && cfg.pre_trained);
  if (wants_heads && voxel_head_ != nullptr) m.LoadVoxelHead(*voxel_head_);
  if (wants_heads && graph_head_ != nullptr) m.LoadGraphHead(*graph_head_);
  return m;
}

std::string ModelTrainable::Init(const Assignment& config, std::uint64_t seed) {
  models::FusionModel m = Build(Resolve(config), seed);
  models::Trainer t(&m, seed);
  t.CalibrateOutputBias(train_);
  return t.SaveState();
}

Trainable::Result ModelTrainable::Train(const std::string& checkpoint, const Assignment& config,
                                        int epochs, std::uint64_t seed) {
  const models::FusionConfig cfg = Resolve(config);
  models::FusionModel m = Build(cfg, 0);
  models::Trainer t(&m, seed);
  t.LoadState(checkpoint);
  t.SetOptimizer(cfg.optimizer);
  t.SetBatchSize(cfg.batch_size);
  Result r;
  for (int e = 0; e < epochs; ++e) {
    t.RunEpoch(train_);
    r.scores.push_back(models::EvaluateMse(m, val_));
  }
  r.checkpoint = t.SaveState();
  return r;
}

}  // namespace fusion::hpo
