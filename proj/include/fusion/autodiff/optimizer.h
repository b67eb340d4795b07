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

#ifndef FUSION_AUTODIFF_OPTIMIZER_H_
#define FUSION_AUTODIFF_OPTIMIZER_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "fusion/autodiff/dense_array.h"
#include "fusion/autodiff/parameters.h"

namespace fusion::autodiff {

enum class OptimizerKind : std::uint8_t { kAdam = 0, kAdamW = 1, kRmsProp = 2, kAdadelta = 3 };

std::string_view OptimizerKindName(OptimizerKind kind);
OptimizerKind ParseOptimizerKind(std::string_view name);

// Coefficients not used by a kind are ignored. Defaults follow the common
// PyTorch values for each rule.
struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  // RMSprop smoothing constant / Adadelta rho.
  double decay = 0.99;

  static OptimizerConfig Defaults(OptimizerKind kind, double learning_rate);
  void Validate() const;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

// Per-parameter accumulators. `first` holds Adam's first moment or Adadelta's
// squared-gradient average; `second` holds Adam's second moment, RMSprop's
// square average, or Adadelta's squared-update average.
struct SlotState {
  DenseArray first;
  DenseArray second;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  // Updates every trainable parameter in `params`. Each must have a gradient
  // of matching shape in `grads`.
  void Step(ParameterStore& params, const GradientMap& grads);

  const OptimizerConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_; }
  const std::map<std::string, SlotState>& slots() const { return slots_; }

  // Restores serialized state.
  void Restore(std::int64_t step, std::map<std::string, SlotState> slots);

 private:
  OptimizerConfig config_;
  std::int64_t step_ = 0;
  std::map<std::string, SlotState> slots_;
};

}  // namespace fusion::autodiff

#endif  // FUSION_AUTODIFF_OPTIMIZER_H_
