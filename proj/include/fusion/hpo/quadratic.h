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

#ifndef FUSION_HPO_QUADRATIC_H_
#define FUSION_HPO_QUADRATIC_H_

#include "fusion/hpo/pb2.h"

namespace fusion::hpo {

// Synthetic time-varying objective over one log-scaled learning rate.
// With u the normalized log learning rate and e the epoch:
//   u*(e)     = clamp(start_optimum + drift_per_epoch * e, 0, 1)
//   progress += max(0, 1 - 4 (u - u*(e))^2)          every epoch
//   score(e)  = (u - u*(e))^2 + exp(-progress / tau)
// The optimum moves, so a fixed schedule falls behind, and progress is
// carried in the checkpoint, so cloning a good trial pays off.
struct QuadraticObjective {
  double low = 1e-5;
  double high = 1e-1;
  double start_optimum = 0.25;
  double drift_per_epoch = 0.01;
  double tau = 10.0;
};

inline constexpr const char* kQuadraticDimension = "optimizer.learning_rate";

HyperParamSpace QuadraticSpace(const QuadraticObjective& objective = {});

class QuadraticTrainable : public Trainable {
 public:
  explicit QuadraticTrainable(QuadraticObjective objective = {}) : objective_(objective) {}

  std::string Init(const Assignment& config, std::uint64_t seed) override;
  Result Train(const std::string& checkpoint, const Assignment& config, int epochs,
               std::uint64_t seed) override;

  double Optimum(int epoch) const;

 private:
  QuadraticObjective objective_;
};

}  // namespace fusion::hpo

#endif  // FUSION_HPO_QUADRATIC_H_
