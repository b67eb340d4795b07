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

#ifndef FUSION_AUTODIFF_GRADIENT_CHECK_H_
#define FUSION_AUTODIFF_GRADIENT_CHECK_H_

#include <cstddef>
#include <string>

#include "fusion/autodiff/graph.h"

namespace fusion::autodiff {

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t elements_checked = 0;
};

// Compares Backward() against central differences for every element of
// every trainable parameter. Error per element is
// |analytic - numeric| / max(1, |numeric|).
//
// Rejects (std::invalid_argument) graphs with active dropout or train-mode
// batch norm, and graphs whose replayed forward pass is not bit-identical.
// Parameter values are restored before returning.
GradientCheckResult GradientCheck(ValueGraph& graph, NodeId loss, double epsilon = 1e-5);

}  // namespace fusion::autodiff

#endif  // FUSION_AUTODIFF_GRADIENT_CHECK_H_
