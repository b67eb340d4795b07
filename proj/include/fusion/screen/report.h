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

#ifndef FUSION_SCREEN_REPORT_H_
#define FUSION_SCREEN_REPORT_H_

#include <cstddef>

#include "json.hpp"

namespace fusion::screen {

// Wall-clock phases of a job and the rates derived from them. Rates use the
// evaluation phase only:
//   poses_per_second   = poses / evaluation_seconds
//   poses_per_hour     = 3600 * poses_per_second
//   compounds_per_hour = poses_per_hour / poses_per_compound
struct ThroughputReport {
  double startup_seconds = 0.0;
  double evaluation_seconds = 0.0;
  double output_seconds = 0.0;
  std::size_t poses = 0;
  double poses_per_compound = 0.0;
  double poses_per_second = 0.0;
  double poses_per_hour = 0.0;
  double compounds_per_hour = 0.0;

  friend bool operator==(const ThroughputReport&, const ThroughputReport&) = default;
};

ThroughputReport MakeThroughputReport(double startup_seconds, double evaluation_seconds,
                                      double output_seconds, std::size_t poses,
                                      double poses_per_compound);

// Fills the derived rates from a measured poses-per-second figure.
ThroughputReport FromPosesPerSecond(double poses_per_second, double poses_per_compound);

double CompoundCount(double poses, double poses_per_compound);

// Field-wise mean of the phase times and rates; poses are summed.
ThroughputReport AverageReports(const std::vector<ThroughputReport>& reports);

nlohmann::json ToJson(const ThroughputReport& r);
ThroughputReport ThroughputReportFromJson(const nlohmann::json& j);

}  // namespace fusion::screen

#endif  // FUSION_SCREEN_REPORT_H_
