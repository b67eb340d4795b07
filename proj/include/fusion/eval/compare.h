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

#ifndef FUSION_EVAL_COMPARE_H_
#define FUSION_EVAL_COMPARE_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fusion/eval/aggregate.h"
#include "fusion/eval/classify.h"
#include "fusion/eval/metrics.h"
#include "json.hpp"

namespace fusion::eval {

using CompoundTarget = std::pair<std::string, std::string>;

// Aggregated score per (compound, target) for one method.
struct MethodScores {
  std::string name;
  Direction direction = Direction::kHigherIsStronger;
  std::map<CompoundTarget, double> scores;
};

MethodScores FromBestPoses(std::string name, const std::vector<BestPose>& best,
                           Direction direction);

struct ExperimentalValue {
  std::string compound_id;
  std::string target_id;
  // Percent inhibition or pK, whichever the table carries.
  double value = 0.0;
  std::optional<double> rmsd;
};

struct ExperimentalTable {
  std::vector<ExperimentalValue> rows;
  // Extra score columns (for example docking energies), one method each.
  std::vector<MethodScores> external;
};

// Comma- or tab-separated with a header. Required columns compound_id,
// target_id and one of value | percent_inhibition | pk; optional rmsd. Every
// other column is an external method whose direction comes from
// `directions` (default lower-is-stronger). Empty cells mean no score.
ExperimentalTable ReadExperimentalTable(const std::filesystem::path& path,
                                        const std::map<std::string, Direction>& directions = {});

struct ComparisonThresholds {
  // Correlations use compounds with value > correlation_min.
  double correlation_min = 1.0;
  // Positive class: value > positive_above.
  double positive_above = 33.0;
  // When set, poses with rmsd >= this are excluded first.
  std::optional<double> rmsd_cutoff;
};

struct ComparisonRow {
  std::string method;
  std::string target;
  std::size_t n = 0;
  std::size_t n_correlation = 0;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<PrCurve> pr;
  std::optional<ConfusionSummary> confusion;
  // Why a statistic is missing.
  std::vector<std::string> notes;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
};

// Per method and target: Pearson/Spearman on the correlation subset, the P/R
// curve with best and top-P F1 under the positive rule, and kappa of the
// top-P calls. Lower-is-stronger methods are compared by absolute value.
// Rejects fewer than two methods and methods whose keys differ from the
// experimental table, listing the differences.
ComparisonReport CompareMethods(const std::vector<MethodScores>& methods,
                                const std::vector<ExperimentalValue>& experimental,
                                const ComparisonThresholds& thresholds);

nlohmann::json ToJson(const ComparisonReport& r);

// Writes report.json, correlation.csv (method,target,n,pearson,spearman),
// pr_curves.csv and scatter.csv under `dir`.
void WriteComparisonReport(const std::filesystem::path& dir, const ComparisonReport& report,
                           const std::vector<MethodScores>& methods,
                           const std::vector<ExperimentalValue>& experimental);

}  // namespace fusion::eval

#endif  // FUSION_EVAL_COMPARE_H_
