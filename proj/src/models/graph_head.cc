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

#include "fusion/models/graph_head.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>

#include "fusion/data/rng.h"
#include "fusion/models/layers.h"

namespace fusion::models {

using autodiff::DenseArray;
using autodiff::NodeId;
using autodiff::ValueGraph;

namespace {

bool InGatherSet(int w) {
  for (int v : {8, 24, 40, 64, 88, 104, 128}) {
    if (v == w) return true;
  }
  return false;
}

}  // namespace

std::vector<std::size_t> GraphHeadConfig::DenseWidths() const {
  const auto first = static_cast<std::size_t>(std::floor(gather_width_noncov / 1.5));
  return {first, first / 2, 1};
}

void GraphHeadConfig::Validate() const {
  if (node_feature_width < 1) throw std::invalid_argument("graph head: bad feature width");
  if (k_cov < 1 || k_noncov < 1) throw std::invalid_argument("graph head: k must be >= 1");
  if (gather_width_cov < 1 || gather_width_noncov < 3) {
    throw std::invalid_argument("graph head: gather widths too small");
  }
  for (double t : {covalent_threshold, noncovalent_threshold}) {
    if (!(t >= data::kMinNeighborThreshold && t <= data::kMaxNeighborThreshold)) {
      throw std::invalid_argument("graph head: neighbor thresholds must lie in [1.2, 5.9] A");
    }
  }
}

void GraphHeadConfig::ValidateSearchDomain() const {
  Validate();
  if (k_cov < 2 || k_cov > 8 || k_noncov < 2 || k_noncov > 8) {
    throw std::invalid_argument("graph head: k outside [2, 8]");
  }
  if (!InGatherSet(gather_width_cov) || !InGatherSet(gather_width_noncov)) {
    throw std::invalid_argument("graph head: gather width outside the search domain");
  }
}

GraphHeadConfig ReferenceGraphHead() {
  GraphHeadConfig c;
  c.k_noncov = 3;
  c.k_cov = 6;
  c.noncovalent_threshold = 5.22;
  c.covalent_threshold = 2.24;
  c.gather_width_noncov = 128;
  c.gather_width_cov = 24;
  return c;
}

GraphHead::GraphHead(GraphHeadConfig config, std::string prefix)
    : config_(config), prefix_(std::move(prefix)) {
  config_.Validate();
}

void GraphHead::InitParams(autodiff::ParameterStore& store, std::uint64_t seed) const {
  std::mt19937_64 rng(MixSeed(seed, 0x47524150480ULL));
  const auto x = static_cast<std::size_t>(config_.node_feature_width);
  const auto w = static_cast<std::size_t>(config_.gather_width_cov);
  const auto out = static_cast<std::size_t>(config_.gather_width_noncov);
  AddDenseParams(store, Name("input"), x, w, rng);
  for (const char* phase : {"cov", "noncov"}) {
    const std::string p = phase;
    AddDenseParams(store, Name(p + "/message"), w + 1, w, rng);
    AddDenseParams(store, Name(p + "/update_gate"), 2 * w, w, rng);
    AddDenseParams(store, Name(p + "/reset_gate"), 2 * w, w, rng);
    AddDenseParams(store, Name(p + "/candidate"), 2 * w, w, rng);
  }
  AddDenseParams(store, Name("gather_cov/i"), w + x, w, rng);
  AddDenseParams(store, Name("gather_cov/j"), w, w, rng);
  AddDenseParams(store, Name("gather_noncov/i"), 2 * w, out, rng);
  AddDenseParams(store, Name("gather_noncov/j"), w, out, rng);
  std::size_t in = out;
  const auto widths = config_.DenseWidths();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    AddDenseParams(store, Name("dense" + std::to_string(i + 1)), in, widths[i], rng);
    in = widths[i];
  }
}

void GraphHead::CheckInput(const data::ComplexGraph& graph) const {
  const std::size_t n = graph.num_nodes();
  if (n == 0) throw std::invalid_argument("graph head: graph has no nodes");
  if (graph.feature_width() != static_cast<std::size_t>(config_.node_feature_width)) {
    throw std::invalid_argument("graph head: node feature width " +
                                std::to_string(graph.feature_width()) + " != expected " +
                                std::to_string(config_.node_feature_width));
  }
  if (!graph.node_features.AllFinite()) {
    throw std::invalid_argument("graph head: non-finite node features");
  }
  for (const auto* list : {&graph.covalent, &graph.noncovalent}) {
    for (const auto& e : *list) {
      if (e.a >= n || e.b >= n || e.a == e.b || !std::isfinite(e.distance) || e.distance < 0) {
        throw std::invalid_argument("graph head: malformed edge");
      }
    }
  }
}

GraphBatch GraphHead::Batch(std::span<const data::ComplexGraph* const> graphs) const {
  if (graphs.empty()) throw std::invalid_argument("graph head: empty batch");
  std::size_t total = 0;
  for (const auto* g : graphs) {
    CheckInput(*g);
    total += g->num_nodes();
  }
  const auto width = static_cast<std::size_t>(config_.node_feature_width);
  GraphBatch b;
  b.graphs = graphs.size();
  b.features = DenseArray({total, width});
  b.graph_of_node.reserve(total);
  std::vector<double> cov_d, noncov_d;
  std::size_t offset = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const data::ComplexGraph& g = *graphs[gi];
    const std::size_t n = g.num_nodes();
    std::memcpy(b.features.data().data() + offset * width, g.node_features.data().data(),
                n * width * sizeof(double));
    b.graph_of_node.insert(b.graph_of_node.end(), n, gi);
    auto add = [&](const std::vector<data::GraphEdge>& list, GraphBatch::Edges& out,
                   std::vector<double>& dist, double threshold) {
      for (const auto& e : list) {
        // Graphs may be built with wider cutoffs than this head uses.
        if (e.distance > threshold) continue;
        for (int dir = 0; dir < 2; ++dir) {
          out.src.push_back(offset + (dir ? e.b : e.a));
          out.dst.push_back(offset + (dir ? e.a : e.b));
          dist.push_back(e.distance / threshold);
        }
      }
    };
    add(g.covalent, b.covalent, cov_d, config_.covalent_threshold);
    add(g.noncovalent, b.noncovalent, noncov_d, config_.noncovalent_threshold);
    offset += n;
  }
  if (!cov_d.empty()) b.covalent.scaled_distance = DenseArray({cov_d.size(), 1}, cov_d);
  if (!noncov_d.empty()) {
    b.noncovalent.scaled_distance = DenseArray({noncov_d.size(), 1}, noncov_d);
  }
  return b;
}

NodeId GraphHead::Propagate(ValueGraph& g, NodeId h, const GraphBatch::Edges& edges,
                            std::size_t nodes, int steps, const std::string& phase) const {
  const auto w = static_cast<std::size_t>(config_.gather_width_cov);
  const NodeId dist = edges.src.empty() ? 0 : g.Input(edges.scaled_distance);
  for (int step = 0; step < steps; ++step) {
    NodeId m;
    if (edges.src.empty()) {
      // No neighbours: the aggregated message is identically zero.
      m = g.Input(DenseArray({nodes, w}));
    } else {
      const NodeId src = g.GatherRows(h, edges.src);
      const std::array<NodeId, 2> parts{src, dist};
      const NodeId msg = DenseLayer(g, g.Concat(parts), Name(phase + "/message"));
      m = g.SegmentSum(msg, edges.dst, nodes);
    }
    const std::array<NodeId, 2> mh{m, h};
    const NodeId cat = g.Concat(mh);
    const NodeId z = g.Sigmoid(DenseLayer(g, cat, Name(phase + "/update_gate")));
    const NodeId r = g.Sigmoid(DenseLayer(g, cat, Name(phase + "/reset_gate")));
    const std::array<NodeId, 2> mrh{m, g.Mul(r, h)};
    const NodeId c = g.Tanh(DenseLayer(g, g.Concat(mrh), Name(phase + "/candidate")));
    h = g.Add(h, g.Mul(z, g.Sub(c, h)));
  }
  return h;
}

HeadOutput GraphHead::Forward(ValueGraph& g, const GraphBatch& batch) const {
  const std::size_t nodes = batch.features.dim(0);
  const NodeId x = g.Input(batch.features);
  NodeId h = DenseLayer(g, x, Name("input"));
  h = Propagate(g, h, batch.covalent, nodes, config_.k_cov, "cov");

  const std::array<NodeId, 2> hx{h, x};
  const NodeId h1 = g.Mul(g.Sigmoid(DenseLayer(g, g.Concat(hx), Name("gather_cov/i"))),
                          DenseLayer(g, h, Name("gather_cov/j")));

  h = Propagate(g, h1, batch.noncovalent, nodes, config_.k_noncov, "noncov");
  const std::array<NodeId, 2> hh{h, h1};
  const NodeId per_node = g.Mul(g.Sigmoid(DenseLayer(g, g.Concat(hh), Name("gather_noncov/i"))),
                                DenseLayer(g, h, Name("gather_noncov/j")));
  const NodeId latent = g.SegmentSum(per_node, batch.graph_of_node, batch.graphs);

  NodeId a = latent;
  const auto widths = config_.DenseWidths();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    a = DenseLayer(g, a, Name("dense" + std::to_string(i + 1)));
    if (i + 1 < widths.size()) a = g.Relu(a);
  }
  return HeadOutput{a, latent};
}

}  // namespace fusion::models
