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

#ifndef FUSION_MODELS_GRAPH_HEAD_H_
#define FUSION_MODELS_GRAPH_HEAD_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fusion/autodiff/graph.h"
#include "fusion/autodiff/parameters.h"
#include "fusion/data/featurize.h"
#include "fusion/models/voxel_head.h"

namespace fusion::models {

// Spatial-graph head in the PotentialNet style.
//
//   h0 = x W_in                                     (width gather_width_cov)
//   k_cov gated steps over covalent edges
//   h1 = sigmoid([h; x] W_i) * (h W_j)              (node gather, same width)
//   k_noncov gated steps over non-covalent edges starting from h1
//   z  = sum over nodes of sigmoid([h; h1] W_i') * (h W_j')
//                                                   (width gather_width_noncov,
//                                                    the layer N-3 latent)
//   dense floor(w / 1.5) relu, dense floor(that / 2) relu, dense 1
//
// One gated step with message m_v = sum_{u ~ v} [h_u, d_uv / threshold] W_m:
//   z = sigmoid([m, h] W_z), r = sigmoid([m, h] W_r),
//   c = tanh([m, r * h] W_c), h' = h + z * (c - h).
// Gate weights are shared across the steps of one phase.
struct GraphHeadConfig {
  int node_feature_width = 8;
  int k_cov = 6;
  int k_noncov = 3;
  int gather_width_cov = 24;
  int gather_width_noncov = 128;
  double covalent_threshold = 2.24;
  double noncovalent_threshold = 5.22;

  // Widths of the dense layers after the graph gather, ending in 1.
  std::vector<std::size_t> DenseWidths() const;
  std::size_t latent_width() const { return static_cast<std::size_t>(gather_width_noncov); }

  void Validate() const;
  // Requires k in [2, 8] and gather widths from {8,24,40,64,88,104,128}.
  void ValidateSearchDomain() const;

  friend bool operator==(const GraphHeadConfig&, const GraphHeadConfig&) = default;
};

GraphHeadConfig ReferenceGraphHead();

// Disjoint union of a batch of graphs with directed edge lists.
struct GraphBatch {
  autodiff::DenseArray features;  // [total nodes, width]
  std::vector<std::size_t> graph_of_node;
  std::size_t graphs = 0;
  struct Edges {
    std::vector<std::size_t> src;
    std::vector<std::size_t> dst;
    autodiff::DenseArray scaled_distance;  // [E, 1], empty when E = 0
  } covalent, noncovalent;
};

class GraphHead {
 public:
  GraphHead(GraphHeadConfig config, std::string prefix);

  void InitParams(autodiff::ParameterStore& store, std::uint64_t seed) const;

  // Rejects feature-width mismatch, empty graphs, bad edge indices,
  // non-finite values.
  void CheckInput(const data::ComplexGraph& graph) const;
  GraphBatch Batch(std::span<const data::ComplexGraph* const> graphs) const;

  HeadOutput Forward(autodiff::ValueGraph& g, const GraphBatch& batch) const;

  const GraphHeadConfig& config() const { return config_; }

 private:
  std::string Name(const std::string& layer) const { return prefix_ + layer; }
  autodiff::NodeId Propagate(autodiff::ValueGraph& g, autodiff::NodeId h,
                             const GraphBatch::Edges& edges, std::size_t nodes, int steps,
                             const std::string& phase) const;

  GraphHeadConfig config_;
  std::string prefix_;
};

}  // namespace fusion::models

#endif  // FUSION_MODELS_GRAPH_HEAD_H_
