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

#include "fusion/eval/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fusion::eval {

namespace {

void CheckPairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("metrics: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("metrics: need at least two pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("metrics: non-finite value at index " + std::to_string(i));
    }
  }
}

double Mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

}  // namespace

std::optional<double> Pearson(std::span<const double> x, std::span<const double> y) {
  CheckPairs(x, y);
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> AverageRanks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> Spearman(std::span<const double> x, std::span<const double> y) {
  CheckPairs(x, y);
  const std::vector<double> rx = AverageRanks(x), ry = AverageRanks(y);
  return Pearson(rx, ry);
}

RegressionReport RegressionMetrics(std::span<const double> predicted,
                                   std::span<const double> actual) {
  CheckPairs(predicted, actual);
  RegressionReport r;
  r.n = predicted.size();
  const double n = static_cast<double>(r.n);
  const double mean_actual = Mean(actual);
  double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double e = predicted[i] - actual[i];
    ss_res += e * e;
    abs_sum += std::abs(e);
    ss_tot += (actual[i] - mean_actual) * (actual[i] - mean_actual);
  }
  r.rmse = std::sqrt(ss_res / n);
  r.mae = abs_sum / n;
  if (ss_tot > 0.0) r.r2 = 1.0 - ss_res / ss_tot;
  r.pearson = Pearson(predicted, actual);
  r.spearman = Spearman(predicted, actual);
  return r;
}

nlohmann::json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json ToJson(const RegressionReport& r) {
  return {{"n", r.n},
          {"rmse", r.rmse},
          {"mae", r.mae},
          {"r2", OptionalJson(r.r2)},
          {"pearson", OptionalJson(r.pearson)},
          {"spearman", OptionalJson(r.spearman)}};
}

}  // namespace fusion::eval
