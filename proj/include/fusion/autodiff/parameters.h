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

#ifndef FUSION_AUTODIFF_PARAMETERS_H_
#define FUSION_AUTODIFF_PARAMETERS_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fusion/autodiff/dense_array.h"

namespace fusion::autodiff {

struct Parameter {
  DenseArray value;
  bool trainable = true;
  // Non-differentiable state such as batch-norm running statistics.
  bool buffer = false;
};

using GradientMap = std::map<std::string, DenseArray>;

// Named parameter storage, ordered by name so iteration and serialization
// are deterministic.
class ParameterStore {
 public:
  DenseArray& Add(const std::string& name, DenseArray init, bool trainable = true);
  DenseArray& AddBuffer(const std::string& name, DenseArray init);

  bool Contains(std::string_view name) const;
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;

  const std::map<std::string, Parameter, std::less<>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }

  // Sets the trainable flag on every non-buffer parameter whose name starts
  // with `prefix`. Returns the number of parameters touched.
  std::size_t SetTrainable(std::string_view prefix, bool trainable);

  std::vector<std::string> TrainableNames() const;
  std::size_t TrainableCount() const;

  // Hash of names, shapes, and raw bits of every parameter under `prefix`.
  std::uint64_t Fingerprint(std::string_view prefix = "") const;

  // Sum of squared element differences over parameters under `prefix`.
  // Both stores must hold the same names and shapes.
  static double SquaredDistance(const ParameterStore& a, const ParameterStore& b,
                                std::string_view prefix = "");

 private:
  std::map<std::string, Parameter, std::less<>> entries_;
};

}  // namespace fusion::autodiff

#endif  // FUSION_AUTODIFF_PARAMETERS_H_
