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

#include "fusion/autodiff/gradient_check.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fusion::autodiff {

GradientCheckResult GradientCheck(ValueGraph& graph, NodeId loss, double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("gradient_check: epsilon must be positive");
  if (graph.params() == nullptr) {
    throw std::invalid_argument("gradient_check: graph has no parameter store");
  }
  if (graph.HasStochasticOps()) {
    throw std::invalid_argument("gradient_check: graph contains active dropout");
  }
  if (graph.HasTrainModeNorm()) {
    throw std::invalid_argument("gradient_check: batch norm must run in eval mode");
  }

  const DenseArray reference = graph.value(loss);
  graph.Replay();
  const DenseArray first = graph.value(loss);
  graph.Replay();
  if (!(graph.value(loss) == first) || !(first == reference)) {
    throw std::invalid_argument("gradient_check: forward pass is not deterministic");
  }

  const GradientMap analytic = graph.Backward(loss);
  ParameterStore& params = *graph.params();

  GradientCheckResult result;
  for (const auto& [name, grad] : analytic) {
    DenseArray& w = params.at(name).value;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + epsilon;
      graph.Replay();
      const double plus = graph.value(loss).item();
      w[i] = saved - epsilon;
      graph.Replay();
      const double minus = graph.value(loss).item();
      w[i] = saved;

      const double numeric = (plus - minus) / (2 * epsilon);
      const double err = std::abs(grad[i] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.elements_checked;
      if (err > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(result.max_relative_error, err);
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  graph.Replay();
  return result;
}

}  // namespace fusion::autodiff
