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

#ifndef FUSION_EVAL_CLASSIFY_H_
#define FUSION_EVAL_CLASSIFY_H_

#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

namespace fusion::eval {

// Labels from a cutoff rule. Empty entries were dropped by a band rule.
struct BinaryLabels {
  std::vector<std::optional<bool>> labels;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t dropped = 0;
};

// value > threshold is positive, anything else negative.
BinaryLabels BinarizeAbove(std::span<const double> values, double threshold);
// value > high is positive, value < low negative, the rest dropped.
BinaryLabels BinarizeBand(std::span<const double> values, double low, double high);

struct ConfusionSummary {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double rho_o = 0.0;
  double rho_e = 0.0;
  // Empty when rho_e == 1.
  std::optional<double> kappa;
};

// Cohen's kappa: (rho_o - rho_e) / (1 - rho_e), where rho_e sums the products
// of the predicted and actual marginals of both classes.
ConfusionSummary Confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);
ConfusionSummary Confusion(const std::vector<bool>& predicted, const std::vector<bool>& actual);

struct PrPoint {
  // Scores >= threshold are predicted positive.
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrCurve {
  // Thresholds descending, so recall is non-decreasing along the list.
  std::vector<PrPoint> points;
  double f1_best = 0.0;
  double best_threshold = 0.0;
  // F1 when exactly as many poses as there are positives are called
  // positive (ties at the cut included).
  double f1_top = 0.0;
  double baseline_precision = 0.0;
  std::size_t positives = 0;
  std::size_t n = 0;
};

// Higher score means more likely positive. Rejects data without both classes.
PrCurve ComputePrCurve(std::span<const double> scores, const std::vector<bool>& labels);

// Predicted labels at the top-P operating point used by PrCurve::f1_top.
std::vector<bool> TopPositives(std::span<const double> scores, std::size_t positives);

// Indices with rmsd < cutoff. Rejects negative rmsd.
std::vector<std::size_t> FilterByRmsd(std::span<const double> rmsd, double cutoff);

nlohmann::json ToJson(const ConfusionSummary& c);
nlohmann::json ToJson(const PrCurve& c, bool with_points = false);

}  // namespace fusion::eval

#endif  // FUSION_EVAL_CLASSIFY_H_
