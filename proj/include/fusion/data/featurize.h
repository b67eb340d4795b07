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

#ifndef FUSION_DATA_FEATURIZE_H_
#define FUSION_DATA_FEATURIZE_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fusion/autodiff/dense_array.h"
#include "fusion/data/complex.h"

namespace fusion::data {

struct GridConfig {
  int extent = 16;
  double box_size = 16.0;
  int element_count = 4;

  int channels() const { return 2 * element_count; }
  void Validate() const;
  friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

// Occupancy of shape [channels, G, G, G]; channel = role * C_elem + element.
struct VoxelGrid {
  int extent = 0;
  int channels = 0;
  autodiff::DenseArray occupancy;

  double Total() const;
  double ChannelTotal(int channel) const;
};

// Nearest-voxel assignment: each atom adds 1.0 to the voxel that contains it
// after mapping the box [-L/2, L/2]^3 linearly onto [0, G)^3. Atoms outside
// the box are clipped to the boundary voxels.
VoxelGrid Voxelize(const SyntheticComplex& complex, const GridConfig& grid);

enum class Axis { kX = 0, kY = 1, kZ = 2 };

// Rotates every channel by quarter_turns * 90 degrees about `axis`.
VoxelGrid Rotate90(const VoxelGrid& grid, Axis axis, int quarter_turns);

// Independently for x, y, z: with probability p rotate by 90, 180, or 270
// degrees (uniform) about that axis. Deterministic in seed.
VoxelGrid RotateAugment(const VoxelGrid& grid, std::uint64_t seed, double p);

struct GraphEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double distance = 0.0;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

// Node features: one-hot element (C_elem) | ligand flag | position / (L/2).
struct ComplexGraph {
  autodiff::DenseArray node_features;
  std::vector<GraphEdge> covalent;
  std::vector<GraphEdge> noncovalent;
  double covalent_threshold = 0.0;
  double noncovalent_threshold = 0.0;

  std::size_t num_nodes() const { return node_features.empty() ? 0 : node_features.dim(0); }
  std::size_t feature_width() const {
    return node_features.empty() ? 0 : node_features.dim(1);
  }
};

inline constexpr double kMinNeighborThreshold = 1.2;
inline constexpr double kMaxNeighborThreshold = 5.9;

std::size_t NodeFeatureWidth(int element_count);

// Covalent edges join same-role atoms within cov_thresh; non-covalent edges
// join protein-ligand pairs within noncov_thresh. Both thresholds must lie
// in [1.2, 5.9] Angstrom. Edges are stored with a < b.
ComplexGraph BuildGraph(const SyntheticComplex& complex, double cov_thresh,
                        double noncov_thresh);

struct FeaturizerConfig {
  GridConfig grid;
  double covalent_threshold = 2.24;
  double noncovalent_threshold = 5.22;
};

// Model-ready pair of representations plus the label.
struct FeaturizedComplex {
  std::string id;
  VoxelGrid grid;
  ComplexGraph graph;
  double label = 0.0;
};

FeaturizedComplex Featurize(const SyntheticComplex& complex, const FeaturizerConfig& config);
std::vector<FeaturizedComplex> FeaturizeAll(const std::vector<SyntheticComplex>& complexes,
                                            const FeaturizerConfig& config);

}  // namespace fusion::data

#endif  // FUSION_DATA_FEATURIZE_H_
