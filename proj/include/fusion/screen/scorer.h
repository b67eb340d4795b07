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

#ifndef FUSION_SCREEN_SCORER_H_
#define FUSION_SCREEN_SCORER_H_

#include <optional>
#include <span>
#include <vector>

#include "fusion/data/complex.h"
#include "fusion/data/featurize.h"
#include "fusion/models/fusion_model.h"
#include "fusion/screen/library.h"

namespace fusion::screen {

// A pose after the loader stage.
struct LoadedPose {
  const PoseRecord* record = nullptr;
  std::optional<data::FeaturizedComplex> item;
};

// Both methods are called concurrently from many threads and must not
// mutate shared state.
class Scorer {
 public:
  virtual ~Scorer() = default;
  // Loader stage. Throws std::runtime_error for records that cannot be read.
  virtual LoadedPose Load(const PoseRecord& record) const = 0;
  // One prediction or error per pose, in order.
  virtual std::vector<models::ItemPrediction> Score(std::span<const LoadedPose> batch) const = 0;
};

// Regenerates and featurizes each complex, then runs a frozen model.
class ModelScorer : public Scorer {
 public:
  ModelScorer(const models::FusionModel* model, data::GenerationParams generation,
              data::FeaturizerConfig featurizer);

  LoadedPose Load(const PoseRecord& record) const override;
  std::vector<models::ItemPrediction> Score(std::span<const LoadedPose> batch) const override;

 private:
  const models::FusionModel* model_;
  data::GenerationParams generation_;
  data::FeaturizerConfig featurizer_;
};

// Fixed-cost stand-in: sleeps seconds_per_pose per pose of a batch and
// returns a hash of the pose key mapped to [2, 10).
class SyntheticScorer : public Scorer {
 public:
  explicit SyntheticScorer(double seconds_per_pose = 0.0) : seconds_per_pose_(seconds_per_pose) {}

  LoadedPose Load(const PoseRecord& record) const override;
  std::vector<models::ItemPrediction> Score(std::span<const LoadedPose> batch) const override;

  static double Prediction(const PoseKey& key);

 private:
  double seconds_per_pose_;
};

}  // namespace fusion::screen

#endif  // FUSION_SCREEN_SCORER_H_
