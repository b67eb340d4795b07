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

#ifndef FUSION_SCREEN_LIBRARY_H_
#define FUSION_SCREEN_LIBRARY_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fusion::screen {

inline constexpr int kMaxPosesPerPair = 10;

struct PoseKey {
  std::string compound_id;
  std::string target_id;
  int pose_id = 0;

  friend auto operator<=>(const PoseKey&, const PoseKey&) = default;
  friend bool operator==(const PoseKey&, const PoseKey&) = default;
};

std::string ToString(const PoseKey& key);

// One docked pose. The payload is resolved by loaders: `seed` regenerates the
// synthetic complex the pose stands for.
struct PoseRecord {
  PoseKey key;
  std::uint64_t seed = 0;

  friend bool operator==(const PoseRecord&, const PoseRecord&) = default;
};

// Stable hash of ToString(key); drives fault draws and synthetic scores.
std::uint64_t KeyHash(const PoseKey& key);

// `compounds` x `targets` x `poses_per_pair` records, ordered by compound,
// target, pose. Deterministic in seed.
std::vector<PoseRecord> GenerateLibrary(std::size_t compounds,
                                        const std::vector<std::string>& targets,
                                        int poses_per_pair, std::uint64_t seed);

// Rejects duplicate keys, pose ids outside [0, 10) and empty ids.
void ValidateLibrary(const std::vector<PoseRecord>& library);

// Mean number of poses per distinct compound.
double MeanPosesPerCompound(const std::vector<PoseRecord>& library);

nlohmann::json ToJson(const PoseRecord& r);
PoseRecord PoseRecordFromJson(const nlohmann::json& j);

// One JSON object per line.
void WriteLibrary(const std::filesystem::path& path, const std::vector<PoseRecord>& library);
std::vector<PoseRecord> ReadLibrary(const std::filesystem::path& path);

}  // namespace fusion::screen

#endif  // FUSION_SCREEN_LIBRARY_H_
