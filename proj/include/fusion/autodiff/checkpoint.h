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

#ifndef FUSION_AUTODIFF_CHECKPOINT_H_
#define FUSION_AUTODIFF_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "fusion/autodiff/optimizer.h"
#include "fusion/autodiff/parameters.h"

namespace fusion::autodiff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct OptimizerState {
  OptimizerConfig config;
  std::int64_t step = 0;
  std::map<std::string, SlotState> slots;

  static OptimizerState Capture(const Optimizer& optimizer);
  Optimizer Rebuild() const;
};

// Parameters, optional optimizer state, and free-form metadata (the model
// layer stores its JSON config there).
struct Checkpoint {
  ParameterStore params;
  std::optional<OptimizerState> optimizer;
  std::string metadata;
};

// Binary layout, little-endian:
//   magic "FSNCKPT1", u32 version,
//   u32 n_params, { str name, u8 flags, array }*,
//   u8 has_optimizer, [ u8 kind, f64 lr, beta1, beta2, epsilon, weight_decay,
//                       decay, i64 step, u32 n_slots, { str, array, array }* ],
//   str metadata, u64 fnv1a checksum of every preceding byte.
// str = u64 length + bytes; array = u32 rank, u64 dims..., f64 data...
// Doubles are copied bit-for-bit.
std::string SerializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint DeserializeCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace fusion::autodiff

#endif  // FUSION_AUTODIFF_CHECKPOINT_H_
