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

#ifndef FUSION_EVAL_AGGREGATE_H_
#define FUSION_EVAL_AGGREGATE_H_

#include <span>
#include <string>
#include <vector>

#include "fusion/screen/job.h"

namespace fusion::eval {

// Fusion predicts pK (higher is stronger); docking and MM/GBSA energies are
// lower-is-stronger.
enum class Direction { kHigherIsStronger, kLowerIsStronger };

const char* DirectionName(Direction d);
Direction ParseDirection(const std::string& name);

struct BestPose {
  std::string compound_id;
  std::string target_id;
  int pose_id = 0;
  double score = 0.0;
  friend bool operator==(const BestPose&, const BestPose&) = default;
};

// Strongest pose per (compound, target): max or min by direction, lowest
// pose id among ties. Sorted by (compound, target).
std::vector<BestPose> AggregateBestPose(std::span<const screen::PredictionRecord> records,
                                        Direction direction);

}  // namespace fusion::eval

#endif  // FUSION_EVAL_AGGREGATE_H_
