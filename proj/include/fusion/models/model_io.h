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

#ifndef FUSION_MODELS_MODEL_IO_H_
#define FUSION_MODELS_MODEL_IO_H_

#include <filesystem>

#include "fusion/models/fusion_model.h"
#include "json.hpp"

namespace fusion::models {

nlohmann::json ToJson(const autodiff::OptimizerConfig& c);
nlohmann::json ToJson(const VoxelHeadConfig& c);
nlohmann::json ToJson(const GraphHeadConfig& c);
nlohmann::json ToJson(const FusionConfig& c);

// Missing keys keep their defaults, so partial config files are accepted.
// Unknown keys are rejected to catch typos.
autodiff::OptimizerConfig OptimizerConfigFromJson(const nlohmann::json& j);
VoxelHeadConfig VoxelHeadConfigFromJson(const nlohmann::json& j);
GraphHeadConfig GraphHeadConfigFromJson(const nlohmann::json& j);
FusionConfig FusionConfigFromJson(const nlohmann::json& j);

FusionConfig LoadFusionConfig(const std::filesystem::path& path);

// Writes the parameter checkpoint to `path` and the full config to
// `path` + ".json".
void SaveModel(const std::filesystem::path& path, const FusionModel& model);
FusionModel LoadModel(const std::filesystem::path& path);

}  // namespace fusion::models

#endif  // FUSION_MODELS_MODEL_IO_H_
