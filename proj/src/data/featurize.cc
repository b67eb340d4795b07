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

#include "fusion/data/featurize.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fusion/data/rng.h"

namespace fusion::data {

using autodiff::DenseArray;

void GridConfig::Validate() const {
  if (extent < 8) throw std::invalid_argument("voxelize: grid extent must be >= 8");
  if (!(box_size > 0)) throw std::invalid_argument("voxelize: box_size must be positive");
  if (element_count < 1) throw std::invalid_argument("voxelize: element_count must be >= 1");
}

double VoxelGrid::Total() const {
  double s = 0;
  for (double v : occupancy.data()) s += v;
  return s;
}

double VoxelGrid::ChannelTotal(int channel) const {
  const std::size_t n = static_cast<std::size_t>(extent) * extent * extent;
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += occupancy[channel * n + i];
  return s;
}

VoxelGrid Voxelize(const SyntheticComplex& complex, const GridConfig& grid) {
  grid.Validate();
  const int g = grid.extent;
  VoxelGrid out{g, grid.channels(),
                DenseArray({static_cast<std::size_t>(grid.channels()), static_cast<std::size_t>(g),
                            static_cast<std::size_t>(g), static_cast<std::size_t>(g)})};
  const double half = grid.box_size / 2;
  const double scale = g / grid.box_size;
  for (const Atom& atom : complex.atoms) {
    if (atom.element < 0 || atom.element >= grid.element_count) {
      throw std::invalid_argument("voxelize: element channel out of range in " + complex.id);
    }
    int idx[3];
    for (int k = 0; k < 3; ++k) {
      const double t = std::floor((atom.position[k] + half) * scale);
      idx[k] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(g - 1)));
    }
    const int channel = static_cast<int>(atom.role) * grid.element_count + atom.element;
    const std::size_t flat = ((static_cast<std::size_t>(channel) * g + idx[0]) * g + idx[1]) * g +
                             idx[2];
    out.occupancy[flat] += 1.0;
  }
  return out;
}

VoxelGrid Rotate90(const VoxelGrid& grid, Axis axis, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return grid;
  const int g = grid.extent;
  const std::size_t plane = static_cast<std::size_t>(g) * g * g;
  VoxelGrid out{grid.extent, grid.channels, DenseArray(grid.occupancy.shape())};
  // One quarter turn maps (u, v) -> (v, g-1-u) in the plane orthogonal to axis.
  auto rotate_once = [&](const DenseArray& src, DenseArray& dst) {
    for (int c = 0; c < grid.channels; ++c) {
      for (int x = 0; x < g; ++x) {
        for (int y = 0; y < g; ++y) {
          for (int z = 0; z < g; ++z) {
            int nx = x, ny = y, nz = z;
            switch (axis) {
              case Axis::kX: ny = z; nz = g - 1 - y; break;
              case Axis::kY: nz = x; nx = g - 1 - z; break;
              case Axis::kZ: nx = y; ny = g - 1 - x; break;
            }
            dst[c * plane + (static_cast<std::size_t>(nx) * g + ny) * g + nz] =
                src[c * plane + (static_cast<std::size_t>(x) * g + y) * g + z];
          }
        }
      }
    }
  };
  DenseArray current = grid.occupancy;
  for (int t = 0; t < turns; ++t) {
    rotate_once(current, out.occupancy);
    current = out.occupancy;
  }
  return out;
}

VoxelGrid RotateAugment(const VoxelGrid& grid, std::uint64_t seed, double p) {
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("rotate_augment: p must be in [0, 1]");
  std::mt19937_64 rng(MixSeed(seed, 0x524f54415445ULL));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> turns(1, 3);
  VoxelGrid out = grid;
  for (Axis axis : {Axis::kX, Axis::kY, Axis::kZ}) {
    const bool fire = coin(rng) < p;
    const int k = turns(rng);
    if (fire) out = Rotate90(out, axis, k);
  }
  return out;
}

std::size_t NodeFeatureWidth(int element_count) {
  return static_cast<std::size_t>(element_count) + 4;
}

ComplexGraph BuildGraph(const SyntheticComplex& complex, double cov_thresh,
                        double noncov_thresh) {
  for (double t : {cov_thresh, noncov_thresh}) {
    if (!(t >= kMinNeighborThreshold && t <= kMaxNeighborThreshold)) {
      throw std::invalid_argument("build_graph: neighbor thresholds must lie in [1.2, 5.9] A");
    }
  }
  const int c_elem = complex.params.element_count;
  const std::size_t n = complex.atoms.size();
  if (n == 0) throw std::invalid_argument("build_graph: complex has no atoms");
  const std::size_t width = NodeFeatureWidth(c_elem);
  ComplexGraph graph;
  graph.covalent_threshold = cov_thresh;
  graph.noncovalent_threshold = noncov_thresh;
  graph.node_features = DenseArray({n, width});
  const double half = complex.params.box_size / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = complex.atoms[i];
    if (a.element < 0 || a.element >= c_elem) {
      throw std::invalid_argument("build_graph: element channel out of range");
    }
    double* row = graph.node_features.data().data() + i * width;
    row[a.element] = 1.0;
    row[c_elem] = a.role == AtomRole::kLigand ? 1.0 : 0.0;
    for (int k = 0; k < 3; ++k) row[c_elem + 1 + k] = a.position[k] / half;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3& p = complex.atoms[i].position;
      const Vec3& q = complex.atoms[j].position;
      const double d = std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                                 (p[2] - q[2]) * (p[2] - q[2]));
      const GraphEdge e{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), d};
      if (complex.atoms[i].role == complex.atoms[j].role) {
        if (d <= cov_thresh) graph.covalent.push_back(e);
      } else if (d <= noncov_thresh) {
        graph.noncovalent.push_back(e);
      }
    }
  }
  return graph;
}

FeaturizedComplex Featurize(const SyntheticComplex& complex, const FeaturizerConfig& config) {
  return FeaturizedComplex{
      complex.id, Voxelize(complex, config.grid),
      BuildGraph(complex, config.covalent_threshold, config.noncovalent_threshold),
      complex.label_pk};
}

std::vector<FeaturizedComplex> FeaturizeAll(const std::vector<SyntheticComplex>& complexes,
                                            const FeaturizerConfig& config) {
  std::vector<FeaturizedComplex> out;
  out.reserve(complexes.size());
  for (const auto& c : complexes) out.push_back(Featurize(c, config));
  return out;
}

}  // namespace fusion::data
