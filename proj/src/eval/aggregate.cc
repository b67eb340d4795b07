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

#include "fusion/eval/aggregate.h"

#include <map>
#include <stdexcept>
#include <utility>

namespace fusion::eval {

const char* DirectionName(Direction d) {
  return d == Direction::kHigherIsStronger ? "higher" : "lower";
}

Direction ParseDirection(const std::string& name) {
  if (name == "higher") return Direction::kHigherIsStronger;
  if (name == "lower") return Direction::kLowerIsStronger;
  throw std::invalid_argument("unknown score direction '" + name + "' (higher|lower)");
}

std::vector<BestPose> AggregateBestPose(std::span<const screen::PredictionRecord> records,
                                        Direction direction) {
  std::map<std::pair<std::string, std::string>, BestPose> best;
  for (const screen::PredictionRecord& r : records) {
    const BestPose candidate{r.compound_id, r.target_id, r.pose_id, r.predicted_pk};
    auto [it, inserted] = best.try_emplace({r.compound_id, r.target_id}, candidate);
    if (inserted) continue;
    BestPose& cur = it->second;
    const bool stronger = direction == Direction::kHigherIsStronger ? r.predicted_pk > cur.score
                                                                   : r.predicted_pk < cur.score;
    if (stronger || (r.predicted_pk == cur.score && r.pose_id < cur.pose_id)) cur = candidate;
  }
  std::vector<BestPose> out;
  out.reserve(best.size());
  for (auto& [key, b] : best) out.push_back(std::move(b));
  return out;
}

}  // namespace fusion::eval
