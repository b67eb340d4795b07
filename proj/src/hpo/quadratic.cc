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

#include "fusion/hpo/quadratic.h"

#include <algorithm>
#include <cmath>

namespace fusion::hpo {

using nlohmann::json;

HyperParamSpace QuadraticSpace(const QuadraticObjective& objective) {
  return HyperParamSpace(
      {Dimension::Continuous(kQuadraticDimension, objective.low, objective.high, Scale::kLog)});
}

double QuadraticTrainable::Optimum(int epoch) const {
  return std::clamp(objective_.start_optimum + objective_.drift_per_epoch * epoch, 0.0, 1.0);
}

std::string QuadraticTrainable::Init(const Assignment&, std::uint64_t) {
  return json{{"epoch", 0}, {"progress", 0.0}}.dump();
}

Trainable::Result QuadraticTrainable::Train(const std::string& checkpoint,
                                            const Assignment& config, int epochs,
                                            std::uint64_t) {
  const json state = json::parse(checkpoint);
  int epoch = state.at("epoch").get<int>();
  double progress = state.at("progress").get<double>();
  const Dimension dim = QuadraticSpace(objective_).at(kQuadraticDimension);
  const double u = dim.Normalize(config.at(kQuadraticDimension).get<double>());
  Result r;
  for (int e = 0; e < epochs; ++e) {
    ++epoch;
    const double d = u - Optimum(epoch);
    progress += std::max(0.0, 1.0 - 4.0 * d * d);
    r.scores.push_back(d * d + std::exp(-progress / objective_.tau));
  }
  r.checkpoint = json{{"epoch", epoch}, {"progress", progress}}.dump();
  return r;
}

}  // namespace fusion::hpo
