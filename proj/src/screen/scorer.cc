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

#include "fusion/screen/scorer.h"

#include <chrono>
#include <stdexcept>
#include <thread>

#include "fusion/data/rng.h"

namespace fusion::screen {

ModelScorer::ModelScorer(const models::FusionModel* model, data::GenerationParams generation,
                         data::FeaturizerConfig featurizer)
    : model_(model), generation_(generation), featurizer_(featurizer) {
  if (model_ == nullptr) throw std::invalid_argument("model scorer: null model");
  generation_.Validate();
}

LoadedPose ModelScorer::Load(const PoseRecord& record) const {
  data::SyntheticComplex complex = data::GenerateComplex(record.seed, generation_);
  complex.id = ToString(record.key);
  return {&record, data::Featurize(complex, featurizer_)};
}

std::vector<models::ItemPrediction> ModelScorer::Score(std::span<const LoadedPose> batch) const {
  std::vector<const data::FeaturizedComplex*> items;
  items.reserve(batch.size());
  for (const LoadedPose& p : batch) {
    if (!p.item) throw std::invalid_argument("model scorer: pose was not loaded");
    items.push_back(&*p.item);
  }
  return model_->PredictBatch(items);
}

LoadedPose SyntheticScorer::Load(const PoseRecord& record) const { return {&record, {}}; }

double SyntheticScorer::Prediction(const PoseKey& key) {
  return 2.0 + 8.0 * HashToUnit(KeyHash(key));
}

std::vector<models::ItemPrediction> SyntheticScorer::Score(
    std::span<const LoadedPose> batch) const {
  if (seconds_per_pose_ > 0.0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(
        seconds_per_pose_ * static_cast<double>(batch.size())));
  }
  std::vector<models::ItemPrediction> out;
  out.reserve(batch.size());
  for (const LoadedPose& p : batch) out.push_back({Prediction(p.record->key), {}});
  return out;
}

}  // namespace fusion::screen
