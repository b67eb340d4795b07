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

#ifndef FUSION_EVAL_METRICS_H_
#define FUSION_EVAL_METRICS_H_

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace fusion::eval {

// Undefined statistics (zero variance) are empty rather than NaN.
struct RegressionReport {
  std::size_t n = 0;
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;
  std::optional<double> pearson;
  std::optional<double> spearman;
};

// Rejects n < 2, unequal lengths and non-finite values.
RegressionReport RegressionMetrics(std::span<const double> predicted,
                                   std::span<const double> actual);

std::optional<double> Pearson(std::span<const double> x, std::span<const double> y);
// Pearson correlation of average ranks.
std::optional<double> Spearman(std::span<const double> x, std::span<const double> y);
// 1-based ranks; tied values share the mean of their positions.
std::vector<double> AverageRanks(std::span<const double> x);

nlohmann::json ToJson(const RegressionReport& r);
// JSON null for an empty optional.
nlohmann::json OptionalJson(const std::optional<double>& v);

}  // namespace fusion::eval

#endif  // FUSION_EVAL_METRICS_H_
