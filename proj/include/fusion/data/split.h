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

#ifndef FUSION_DATA_SPLIT_H_
#define FUSION_DATA_SPLIT_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fusion::data {

struct LabeledItem {
  std::string id;
  double label = 0.0;
};

inline constexpr int kQuintiles = 5;

struct SplitResult {
  // Indices into the input dataset, ascending.
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  // Per-quintile bucket sizes and withdrawn counts, lowest labels first.
  std::vector<std::size_t> bucket_sizes;
  std::vector<std::size_t> bucket_holdout;
};

// Rounds x to the nearest integer with exact halves going down.
std::size_t RoundHalfDown(double x);

// Stratified holdout: stable sort by (label, id), cut into five equal-count
// contiguous buckets (earlier buckets take the remainder), then withdraw
// RoundHalfDown(fraction * bucket size) items uniformly at random from each
// bucket. Requires at least 10 items and 0 < fraction < 1.
SplitResult QuintileSplit(std::span<const LabeledItem> dataset, double holdout_fraction,
                          std::uint64_t seed);

}  // namespace fusion::data

#endif  // FUSION_DATA_SPLIT_H_
