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

#include "fusion/data/split.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fusion/data/rng.h"

namespace fusion::data {

std::size_t RoundHalfDown(double x) {
  const double up = std::ceil(x - 0.5);
  return static_cast<std::size_t>(std::max(0.0, up));
}

SplitResult QuintileSplit(std::span<const LabeledItem> dataset, double holdout_fraction,
                          std::uint64_t seed) {
  if (!(holdout_fraction > 0 && holdout_fraction < 1)) {
    throw std::invalid_argument("quintile_split: holdout fraction must be in (0, 1)");
  }
  if (dataset.size() < 10) {
    throw std::invalid_argument("quintile_split: need at least 10 items to fill 5 buckets");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dataset[a].label != dataset[b].label) return dataset[a].label < dataset[b].label;
    return dataset[a].id < dataset[b].id;
  });

  SplitResult result;
  std::mt19937_64 rng(MixSeed(seed, 0x53504c4954ULL));
  const std::size_t n = dataset.size();
  const std::size_t base = n / kQuintiles, extra = n % kQuintiles;
  std::vector<bool> held(n, false);
  std::size_t begin = 0;
  for (int q = 0; q < kQuintiles; ++q) {
    const std::size_t size = base + (static_cast<std::size_t>(q) < extra ? 1 : 0);
    const std::size_t take = std::min(size, RoundHalfDown(holdout_fraction * size));
    std::vector<std::size_t> bucket(order.begin() + begin, order.begin() + begin + size);
    std::shuffle(bucket.begin(), bucket.end(), rng);
    for (std::size_t i = 0; i < take; ++i) held[bucket[i]] = true;
    result.bucket_sizes.push_back(size);
    result.bucket_holdout.push_back(take);
    begin += size;
  }
  for (std::size_t i = 0; i < n; ++i) (held[i] ? result.validation : result.train).push_back(i);
  return result;
}

}  // namespace fusion::data
