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

#include "fusion/models/voxel_head.h"

#include <algorithm>
#include <cstring>
#include <random>
#include <stdexcept>

#include "fusion/data/rng.h"
#include "fusion/models/layers.h"

namespace fusion::models {

using autodiff::DenseArray;
using autodiff::Mode;
using autodiff::NodeId;
using autodiff::ValueGraph;

namespace {

template <typename T>
bool OneOf(T v, std::initializer_list<T> set) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

void CheckRate(double r, const char* what) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw std::invalid_argument(std::string("voxel head: ") + what + " must lie in [0, 1)");
  }
}

}  // namespace

std::size_t VoxelHeadConfig::flattened_width() const {
  const std::size_t side = static_cast<std::size_t>(grid_extent / 4);
  return static_cast<std::size_t>(conv_filters_2) * side * side * side;
}

void VoxelHeadConfig::Validate() const {
  if (grid_extent < 4 || grid_extent % 4 != 0) {
    throw std::invalid_argument("voxel head: grid extent must be a positive multiple of 4");
  }
  if (channels < 1 || conv_filters_1 < 1 || conv_filters_2 < 1) {
    throw std::invalid_argument("voxel head: channel and filter counts must be positive");
  }
  if (kernel_1 < 1 || kernel_1 % 2 == 0 || kernel_2 < 1 || kernel_2 % 2 == 0) {
    throw std::invalid_argument("voxel head: kernels must be odd");
  }
  if (dense_nodes < 2) throw std::invalid_argument("voxel head: dense_nodes must be >= 2");
  CheckRate(dropout_early, "dropout_early");
  CheckRate(dropout_mid, "dropout_mid");
}

void VoxelHeadConfig::ValidateSearchDomain() const {
  Validate();
  if (!OneOf(conv_filters_1, {32, 64, 96}) || !OneOf(conv_filters_2, {64, 96, 128}) ||
      !OneOf(dense_nodes, {40, 64, 88, 104, 128})) {
    throw std::invalid_argument("voxel head: filter or node count outside the search domain");
  }
  if (kernel_1 != 5 || kernel_2 != 3) {
    throw std::invalid_argument("voxel head: kernels must be 5 then 3");
  }
}

VoxelHeadConfig ReferenceVoxelHead() {
  VoxelHeadConfig c;
  c.conv_filters_1 = 32;
  c.conv_filters_2 = 64;
  c.dense_nodes = 128;
  c.residual_1 = false;
  c.residual_2 = true;
  c.batch_norm = false;
  return c;
}

VoxelHead::VoxelHead(VoxelHeadConfig config, std::string prefix)
    : config_(config), prefix_(std::move(prefix)) {
  config_.Validate();
}

void VoxelHead::InitParams(autodiff::ParameterStore& store, std::uint64_t seed) const {
  std::mt19937_64 rng(MixSeed(seed, 0x564f58454cULL));
  const auto& c = config_;
  const auto f1 = static_cast<std::size_t>(c.conv_filters_1);
  const auto f2 = static_cast<std::size_t>(c.conv_filters_2);
  const auto k1 = static_cast<std::size_t>(c.kernel_1);
  const auto k2 = static_cast<std::size_t>(c.kernel_2);
  AddConvParams(store, Name("conv1"), c.channels, f1, k1, rng);
  if (c.batch_norm) AddBatchNormParams(store, Name("bn1"), f1);
  if (c.residual_1) AddConvParams(store, Name("conv1b"), f1, f1, k1, rng);
  AddConvParams(store, Name("conv2"), f1, f2, k2, rng);
  if (c.residual_2) AddConvParams(store, Name("conv2b"), f2, f2, k2, rng);
  const auto dense = static_cast<std::size_t>(c.dense_nodes);
  AddDenseParams(store, Name("dense1"), c.flattened_width(), dense, rng);
  AddDenseParams(store, Name("dense2"), dense, c.latent_width(), rng);
  AddDenseParams(store, Name("out"), c.latent_width(), 1, rng);
}

void VoxelHead::CheckInput(const data::VoxelGrid& grid) const {
  const auto g = static_cast<std::size_t>(config_.grid_extent);
  const autodiff::Shape want{static_cast<std::size_t>(config_.channels), g, g, g};
  if (grid.occupancy.shape() != want) {
    throw std::invalid_argument("voxel head: grid shape " +
                                autodiff::ShapeToString(grid.occupancy.shape()) +
                                " does not match expected " + autodiff::ShapeToString(want));
  }
  if (!grid.occupancy.AllFinite()) throw std::invalid_argument("voxel head: non-finite grid");
}

DenseArray VoxelHead::Stack(std::span<const data::VoxelGrid* const> grids) const {
  if (grids.empty()) throw std::invalid_argument("voxel head: empty batch");
  const auto g = static_cast<std::size_t>(config_.grid_extent);
  const auto c = static_cast<std::size_t>(config_.channels);
  DenseArray x({grids.size(), c, g, g, g});
  const std::size_t per = c * g * g * g;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    CheckInput(*grids[i]);
    std::memcpy(x.data().data() + i * per, grids[i]->occupancy.data().data(),
                per * sizeof(double));
  }
  return x;
}

HeadOutput VoxelHead::Forward(ValueGraph& g, NodeId input, Mode mode, bool use_batch_norm) const {
  const auto& c = config_;
  NodeId a = ConvLayer(g, input, Name("conv1"));
  if (c.batch_norm && use_batch_norm) a = BatchNormLayer(g, a, Name("bn1"), mode);
  a = g.Relu(a);
  if (c.residual_1) a = g.Add(a, g.Relu(ConvLayer(g, a, Name("conv1b"))));
  a = g.MaxPool3d(a, 2);
  a = g.Relu(ConvLayer(g, a, Name("conv2")));
  if (c.residual_2) a = g.Add(a, g.Relu(ConvLayer(g, a, Name("conv2b"))));
  a = g.MaxPool3d(a, 2);
  const std::size_t batch = g.value(a).dim(0);
  a = g.Reshape(a, {batch, c.flattened_width()});
  a = g.Dropout(a, c.dropout_early, mode);
  a = g.Relu(DenseLayer(g, a, Name("dense1")));
  a = g.Dropout(a, c.dropout_mid, mode);
  const NodeId latent = g.Relu(DenseLayer(g, a, Name("dense2")));
  return HeadOutput{DenseLayer(g, latent, Name("out")), latent};
}

}  // namespace fusion::models
