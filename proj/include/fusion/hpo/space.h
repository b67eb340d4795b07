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

#ifndef FUSION_HPO_SPACE_H_
#define FUSION_HPO_SPACE_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace fusion::hpo {

enum class DimKind : std::uint8_t { kCategorical, kBoolean, kContinuous };
enum class Scale : std::uint8_t { kLinear, kLog };

// One searched hyperparameter. Names are dotted config paths such as
// "optimizer.learning_rate" or "graph.k_cov".
struct Dimension {
  std::string name;
  DimKind kind = DimKind::kContinuous;
  std::vector<nlohmann::json> choices;  // categorical only
  double low = 0.0;                     // continuous only
  double high = 1.0;
  Scale scale = Scale::kLinear;
  // Structural dimensions (layer sizes and the like) are sampled once and
  // never changed by explore, because a cloned checkpoint fixes them.
  bool mutable_after_init = true;

  static Dimension Continuous(std::string name, double low, double high, Scale scale,
                              bool mutable_after_init = true);
  static Dimension Categorical(std::string name, std::vector<nlohmann::json> choices,
                               bool mutable_after_init = true);
  static Dimension Boolean(std::string name, bool mutable_after_init = true);

  // Continuous value <-> [0, 1], linear or logarithmic.
  double Normalize(double value) const;
  double Denormalize(double unit) const;
  bool Contains(const nlohmann::json& value) const;
};

// An assignment maps dimension names to values, as a flat JSON object.
using Assignment = nlohmann::json;

class HyperParamSpace {
 public:
  HyperParamSpace() = default;
  explicit HyperParamSpace(std::vector<Dimension> dims);

  const std::vector<Dimension>& dimensions() const { return dims_; }
  const Dimension& at(const std::string& name) const;
  std::vector<std::size_t> ContinuousIndices() const;

  Assignment Sample(std::mt19937_64& rng) const;
  void CheckAssignment(const Assignment& a) const;

  nlohmann::json ToJson() const;
  static HyperParamSpace FromJson(const nlohmann::json& j);
  static HyperParamSpace Load(const std::filesystem::path& path);

 private:
  std::vector<Dimension> dims_;
};

// Independent draws: uniform over categorical values, uniform in linear or
// log space over continuous ranges. Deterministic in seed.
std::vector<Assignment> SampleInitialPopulation(const HyperParamSpace& space, std::size_t n,
                                                std::uint64_t seed);

// The reference search spaces, one per model column ("3d", "sg", "fusion").
HyperParamSpace PresetSpace(const std::string& column);

// Writes the dotted-path values of `a` into a nested JSON config. Choosing an
// optimizer kind resets that optimizer's remaining coefficients to defaults.
nlohmann::json ApplyAssignment(nlohmann::json config, const Assignment& a);

}  // namespace fusion::hpo

#endif  // FUSION_HPO_SPACE_H_
