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

#include "fusion/screen/report.h"

#include <stdexcept>

namespace fusion::screen {

using nlohmann::json;

ThroughputReport FromPosesPerSecond(double poses_per_second, double poses_per_compound) {
  if (!(poses_per_compound > 0.0)) {
    throw std::invalid_argument("throughput: poses per compound must be positive");
  }
  ThroughputReport r;
  r.poses_per_compound = poses_per_compound;
  r.poses_per_second = poses_per_second;
  r.poses_per_hour = 3600.0 * poses_per_second;
  r.compounds_per_hour = r.poses_per_hour / poses_per_compound;
  return r;
}

ThroughputReport MakeThroughputReport(double startup_seconds, double evaluation_seconds,
                                      double output_seconds, std::size_t poses,
                                      double poses_per_compound) {
  if (startup_seconds < 0.0 || evaluation_seconds < 0.0 || output_seconds < 0.0) {
    throw std::invalid_argument("throughput: negative phase time");
  }
  const double pps =
      evaluation_seconds > 0.0 ? static_cast<double>(poses) / evaluation_seconds : 0.0;
  ThroughputReport r = FromPosesPerSecond(pps, poses_per_compound);
  r.startup_seconds = startup_seconds;
  r.evaluation_seconds = evaluation_seconds;
  r.output_seconds = output_seconds;
  r.poses = poses;
  return r;
}

double CompoundCount(double poses, double poses_per_compound) {
  if (!(poses_per_compound > 0.0)) {
    throw std::invalid_argument("throughput: poses per compound must be positive");
  }
  return poses / poses_per_compound;
}

ThroughputReport AverageReports(const std::vector<ThroughputReport>& reports) {
  if (reports.empty()) return {};
  double startup = 0.0, eval = 0.0, output = 0.0, pps = 0.0, ppc = 0.0;
  std::size_t poses = 0;
  for (const ThroughputReport& r : reports) {
    startup += r.startup_seconds;
    eval += r.evaluation_seconds;
    output += r.output_seconds;
    pps += r.poses_per_second;
    ppc += r.poses_per_compound;
    poses += r.poses;
  }
  const double n = static_cast<double>(reports.size());
  ThroughputReport out = FromPosesPerSecond(pps / n, ppc / n);
  out.startup_seconds = startup / n;
  out.evaluation_seconds = eval / n;
  out.output_seconds = output / n;
  out.poses = poses;
  return out;
}

json ToJson(const ThroughputReport& r) {
  return {{"startup_seconds", r.startup_seconds},
          {"evaluation_seconds", r.evaluation_seconds},
          {"output_seconds", r.output_seconds},
          {"poses", r.poses},
          {"poses_per_compound", r.poses_per_compound},
          {"poses_per_second", r.poses_per_second},
          {"poses_per_hour", r.poses_per_hour},
          {"compounds_per_hour", r.compounds_per_hour}};
}

ThroughputReport ThroughputReportFromJson(const json& j) {
  ThroughputReport r;
  r.startup_seconds = j.at("startup_seconds").get<double>();
  r.evaluation_seconds = j.at("evaluation_seconds").get<double>();
  r.output_seconds = j.at("output_seconds").get<double>();
  r.poses = j.at("poses").get<std::size_t>();
  r.poses_per_compound = j.at("poses_per_compound").get<double>();
  r.poses_per_second = j.at("poses_per_second").get<double>();
  r.poses_per_hour = j.at("poses_per_hour").get<double>();
  r.compounds_per_hour = j.at("compounds_per_hour").get<double>();
  return r;
}

}  // namespace fusion::screen
