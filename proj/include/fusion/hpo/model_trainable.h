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

#ifndef FUSION_HPO_MODEL_TRAINABLE_H_
#define FUSION_HPO_MODEL_TRAINABLE_H_

#include <span>

#include "fusion/hpo/pb2.h"
#include "fusion/models/fusion_model.h"

namespace fusion::hpo {

// Runs real model training inside PB2. An assignment is overlaid on the base
// config (dotted paths); the checkpoint is the trainer state, so exploit
// copies weights and optimizer moments together. Scores are validation MSE.
class ModelTrainable : public Trainable {
 public:
  ModelTrainable(models::FusionConfig base, std::span<const data::FeaturizedComplex> train,
                 std::span<const data::FeaturizedComplex> val,
                 const models::FusionModel* voxel_head = nullptr,
                 const models::FusionModel* graph_head = nullptr);

  models::FusionConfig Resolve(const Assignment& config) const;

  std::string Init(const Assignment& config, std::uint64_t seed) override;
  Result Train(const std::string& checkpoint, const Assignment& config, int epochs,
               std::uint64_t seed) override;

 private:
  models::FusionModel Build(const models::FusionConfig& cfg, std::uint64_t seed) const;

  models::FusionConfig base_;
  std::span<const data::FeaturizedComplex> train_;
  std::span<const data::FeaturizedComplex> val_;
  const models::FusionModel* voxel_head_;
  const models::FusionModel* graph_head_;
};

}  // namespace fusion::hpo

#endif  // FUSION_HPO_MODEL_TRAINABLE_H_
