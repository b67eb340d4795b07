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

#ifndef FUSION_MODELS_VOXEL_HEAD_H_
#define FUSION_MODELS_VOXEL_HEAD_H_

#include <cstdint>
#include <span>
#include <string>

#include "fusion/autodiff/graph.h"
#include "fusion/autodiff/parameters.h"
#include "fusion/data/featurize.h"

namespace fusion::models {

// 3D-CNN head. Layout (residual options read from the dashed connections of
// the reference architecture diagram):
//
//   conv1 (kernel_1, C -> f1) [batch-norm] relu
//     residual_1: a1 += relu(conv1b(a1)), conv1b is kernel_1, f1 -> f1
//   max-pool 2
//   conv2 (kernel_2, f1 -> f2) relu
//     residual_2: a2 += relu(conv2b(a2)), conv2b is kernel_2, f2 -> f2
//   max-pool 2
//   flatten, dropout_early, dense1 (dense_nodes) relu,
//   dropout_mid, dense2 (dense_nodes / 2) relu   <- latent (layer M-1)
//   output dense -> 1
struct VoxelHeadConfig {
  int grid_extent = 16;
  int channels = 8;
  int kernel_1 = 5;
  int kernel_2 = 3;
  int conv_filters_1 = 32;
  int conv_filters_2 = 64;
  int dense_nodes = 128;
  bool residual_1 = false;
  bool residual_2 = false;
  bool batch_norm = false;
  double dropout_early = 0.25;
  double dropout_mid = 0.125;

  std::size_t latent_width() const { return static_cast<std::size_t>(dense_nodes / 2); }
  std::size_t flattened_width() const;

  // Structural checks: positive sizes, odd kernels, extent divisible by 4,
  // dropout rates in [0, 1).
  void Validate() const;
  // Additionally requires filter and node counts from the reference search
  // domain ({32,64,96}, {64,96,128}, {40,64,88,104,128}).
  void ValidateSearchDomain() const;

  friend bool operator==(const VoxelHeadConfig&, const VoxelHeadConfig&) = default;
};

// Final 3D-CNN configuration from the reference tuning run.
VoxelHeadConfig ReferenceVoxelHead();

struct HeadOutput {
  autodiff::NodeId prediction;  // [B, 1]
  autodiff::NodeId latent;      // [B, latent width]
};

class VoxelHead {
 public:
  VoxelHead(VoxelHeadConfig config, std::string prefix);

  void InitParams(autodiff::ParameterStore& store, std::uint64_t seed) const;

  // Rejects grids whose extent or channel count differ from the config.
  void CheckInput(const data::VoxelGrid& grid) const;
  autodiff::DenseArray Stack(std::span<const data::VoxelGrid* const> grids) const;

  // `use_batch_norm` lets the caller disable normalization for size-1 batches.
  HeadOutput Forward(autodiff::ValueGraph& g, autodiff::NodeId input, autodiff::Mode mode,
                     bool use_batch_norm) const;

  const VoxelHeadConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string Name(const char* layer) const { return prefix_ + layer; }

  VoxelHeadConfig config_;
  std::string prefix_;
};

}  // namespace fusion::models

#endif  // FUSION_MODELS_VOXEL_HEAD_H_
