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

#include "fusion/screen/library.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "fusion/data/rng.h"

namespace fusion::screen {

using nlohmann::json;

std::string ToString(const PoseKey& key) {
  return key.compound_id + "/" + key.target_id + "/" + std::to_string(key.pose_id);
}

std::uint64_t KeyHash(const PoseKey& key) { return Mix64(Fnv1a(ToString(key))); }

std::vector<PoseRecord> GenerateLibrary(std::size_t compounds,
                                        const std::vector<std::string>& targets,
                                        int poses_per_pair, std::uint64_t seed) {
  if (compounds == 0 || targets.empty()) {
    throw std::invalid_argument("library: need at least one compound and one target");
  }
  if (poses_per_pair < 1 || poses_per_pair > kMaxPosesPerPair) {
    throw std::invalid_argument("library: poses per pair must be in [1, 10]");
  }
  std::vector<PoseRecord> out;
  out.reserve(compounds * targets.size() * static_cast<std::size_t>(poses_per_pair));
  char id[32];
  for (std::size_t c = 0; c < compounds; ++c) {
    std::snprintf(id, sizeof(id), "C%08zu", c);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      for (int p = 0; p < poses_per_pair; ++p) {
        const std::uint64_t stream = (c * targets.size() + t) * kMaxPosesPerPair + p;
        out.push_back({{id, targets[t], p}, MixSeed(seed, stream)});
      }
    }
  }
  return out;
}

void ValidateLibrary(const std::vector<PoseRecord>& library) {
  std::set<PoseKey> seen;
  for (const PoseRecord& r : library) {
    if (r.key.compound_id.empty() || r.key.target_id.empty()) {
      throw std::invalid_argument("library: empty compound or target id");
    }
    if (r.key.pose_id < 0 || r.key.pose_id >= kMaxPosesPerPair) {
      throw std::invalid_argument("library: pose id out of range in " + ToString(r.key));
    }
    if (!seen.insert(r.key).second) {
      throw std::invalid_argument("library: duplicate pose " + ToString(r.key));
    }
  }
}

double MeanPosesPerCompound(const std::vector<PoseRecord>& library) {
  std::set<std::string> compounds;
  for (const PoseRecord& r : library) compounds.insert(r.key.compound_id);
  if (compounds.empty()) return 0.0;
  return static_cast<double>(library.size()) / static_cast<double>(compounds.size());
}

json ToJson(const PoseRecord& r) {
  return {{"compound", r.key.compound_id},
          {"target", r.key.target_id},
          {"pose", r.key.pose_id},
          {"seed", r.seed}};
}

PoseRecord PoseRecordFromJson(const json& j) {
  return {{j.at("compound").get<std::string>(), j.at("target").get<std::string>(),
           j.at("pose").get<int>()},
          j.at("seed").get<std::uint64_t>()};
}

void WriteLibrary(const std::filesystem::path& path, const std::vector<PoseRecord>& library) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const PoseRecord& r : library) out << ToJson(r).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<PoseRecord> ReadLibrary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<PoseRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(PoseRecordFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  ValidateLibrary(out);
  return out;
}

}  // namespace fusion::screen
