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

#include "fusion/models/fusion_model.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "fusion/data/rng.h"
#include "spdlog/spdlog.h"

namespace fusion::models {

using autodiff::DenseArray;
using autodiff::Mode;
using autodiff::NodeId;
using autodiff::ValueGraph;

const char* ModelModeName(ModelMode m) {
  switch (m) {
    case ModelMode::kVoxel: return "3d";
    case ModelMode::kGraph: return "sg";
    case ModelMode::kLate: return "late";
    case ModelMode::kMid: return "mid";
    case ModelMode::kCoherent: return "coherent";
  }
  return "coherent";
}

ModelMode ParseModelMode(const std::string& name) {
  if (name == "3d") return ModelMode::kVoxel;
  if (name == "sg") return ModelMode::kGraph;
  if (name == "late") return ModelMode::kLate;
  if (name == "mid") return ModelMode::kMid;
  if (name == "coherent") return ModelMode::kCoherent;
  throw std::invalid_argument("unknown model mode: " + name + " (want 3d|sg|late|mid|coherent)");
}

std::size_t FusionConfig::fusion_input_width() const {
  const std::size_t base = graph.latent_width() + voxel.latent_width();
  return model_specific_layers ? 2 * base : base;
}

void FusionConfig::Validate() const {
  voxel.Validate();
  graph.Validate();
  if (uses_fusion_layers()) {
    if (n_fusion_layers < 1) throw std::invalid_argument("fusion: need at least one layer");
    if (fusion_nodes < 1) throw std::invalid_argument("fusion: fusion_nodes must be positive");
  }
  for (double r : {dropout_early, dropout_mid, dropout_late}) {
    if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("fusion: dropout must be in [0, 1)");
  }
  if (!(rotation_probability >= 0.0 && rotation_probability <= 1.0)) {
    throw std::invalid_argument("fusion: rotation probability must be in [0, 1]");
  }
  if (batch_size < 1) throw std::invalid_argument("fusion: batch size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("fusion: epochs must be >= 0");
  optimizer.Validate();
  if (static_cast<std::size_t>(graph.node_feature_width) !=
      data::NodeFeatureWidth(voxel.channels / 2)) {
    throw std::invalid_argument(
        "fusion: graph feature width and voxel channel count imply different element counts");
  }
}

void FusionConfig::ValidateSearchDomain() const {
  Validate();
  voxel.ValidateSearchDomain();
  graph.ValidateSearchDomain();
  if (uses_fusion_layers()) {
    if (n_fusion_layers < 3 || n_fusion_layers > 5) {
      throw std::invalid_argument("fusion: layer count outside {3, 4, 5}");
    }
    if (!std::ranges::count(std::array{8, 24, 40, 64, 88, 104, 128}, fusion_nodes)) {
      throw std::invalid_argument("fusion: node count outside the search domain");
    }
    if (dropout_early > 0.5 || dropout_mid > 0.25 || dropout_late > 0.125) {
      throw std::invalid_argument("fusion: dropout outside the search domain");
    }
    if (!std::ranges::count(kFusionBatchSizes, batch_size)) {
      throw std::invalid_argument("fusion: batch size outside the search domain");
    }
  }
}

namespace {

FusionConfig ReferenceBase(ModelMode mode) {
  FusionConfig c;
  c.mode = mode;
  c.voxel = ReferenceVoxelHead();
  c.graph = ReferenceGraphHead();
  return c;
}

}  // namespace

FusionConfig ReferenceVoxelConfig() {
  FusionConfig c = ReferenceBase(ModelMode::kVoxel);
  c.epochs = 75;
  c.batch_size = 12;
  c.optimizer = autodiff::OptimizerConfig::Defaults(autodiff::OptimizerKind::kAdam, 4.90e-5);
  return c;
}

FusionConfig ReferenceGraphConfig() {
  FusionConfig c = ReferenceBase(ModelMode::kGraph);
  c.epochs = 213;
  c.batch_size = 16;
  c.optimizer = autodiff::OptimizerConfig::Defaults(autodiff::OptimizerKind::kAdam, 2.66e-3);
  c.rotation_probability = 0.0;
  return c;
}

FusionConfig ReferenceMidConfig() {
  FusionConfig c = ReferenceBase(ModelMode::kMid);
  c.epochs = 64;
  c.batch_size = 1;
  c.optimizer = autodiff::OptimizerConfig::Defaults(autodiff::OptimizerKind::kAdam, 4.03e-4);
  c.batch_norm = false;
  c.activation = Activation::kSelu;
  c.residual_fusion = true;
  c.model_specific_layers = true;
  c.dropout_early = 0.251;
  c.dropout_mid = 0.125;
  c.dropout_late = 0.0;
  c.n_fusion_layers = 5;
  c.pre_trained = true;
  return c;
}

FusionConfig ReferenceCoherentConfig() {
  FusionConfig c = ReferenceBase(ModelMode::kCoherent);
  c.pre_trained = true;
  c.epochs = 18;
  c.batch_size = 48;
  c.optimizer = autodiff::OptimizerConfig::Defaults(autodiff::OptimizerKind::kAdam, 1.08e-4);
  c.batch_norm = false;
  c.activation = Activation::kSelu;
  c.residual_fusion = false;
  c.model_specific_layers = false;
  c.dropout_early = 0.386;
  c.dropout_mid = 0.247;
  c.dropout_late = 0.055;
  c.n_fusion_layers = 4;
  return c;
}

FusionConfig DeskConfig(ModelMode mode) {
  FusionConfig c;
  c.mode = mode;
  c.voxel.grid_extent = 8;
  c.voxel.kernel_1 = 3;
  c.voxel.kernel_2 = 3;
  c.voxel.conv_filters_1 = 4;
  c.voxel.conv_filters_2 = 8;
  c.voxel.dense_nodes = 16;
  c.voxel.dropout_early = 0.0;
  c.voxel.dropout_mid = 0.0;
  c.graph.k_cov = 2;
  c.graph.k_noncov = 2;
  c.graph.gather_width_cov = 8;
  c.graph.gather_width_noncov = 16;
  c.graph.noncovalent_threshold = 4.0;
  c.fusion_nodes = 16;
  c.n_fusion_layers = 3;
  c.activation = Activation::kRelu;
  c.batch_size = 16;
  c.epochs = 3;
  c.optimizer = autodiff::OptimizerConfig::Defaults(autodiff::OptimizerKind::kAdam, 3e-3);
  return c;
}

data::FeaturizerConfig FeaturizerFor(const FusionConfig& config) {
  data::FeaturizerConfig f;
  f.grid.extent = config.voxel.grid_extent;
  f.grid.element_count = config.voxel.channels / 2;
  f.covalent_threshold = config.graph.covalent_threshold;
  f.noncovalent_threshold = config.graph.noncovalent_threshold;
  return f;
}

double LateFusionPredict(double p_voxel, double p_graph) {
  if (!std::isfinite(p_voxel) || !std::isfinite(p_graph)) {
    throw std::invalid_argument("late fusion: predictions must be finite");
  }
  return (p_voxel + p_graph) / 2;
}

FusionModel::FusionModel(FusionConfig config, std::uint64_t seed)
    : config_((config.Validate(), config)),
      voxel_(config_.voxel, kVoxelPrefix),
      graph_(config_.graph, kGraphPrefix) {
  if ((config_.batch_norm || config_.voxel.batch_norm) && !UseBatchNorm()) {
    spdlog::warn("batch size {} < 2: batch normalization disabled", config_.batch_size);
  }
  voxel_.InitParams(params_, MixSeed(seed, 1));
  graph_.InitParams(params_, MixSeed(seed, 2));
  if (config_.uses_fusion_layers()) InitFusionParams(MixSeed(seed, 3));
  ApplyTrainability();
}

void FusionModel::InitFusionParams(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::string p = kFusionPrefix;
  const std::size_t lg = config_.graph.latent_width(), lv = config_.voxel.latent_width();
  if (config_.model_specific_layers) {
    AddDenseParams(params_, p + "graph_specific", lg, lg, rng);
    AddDenseParams(params_, p + "voxel_specific", lv, lv, rng);
  }
  std::size_t in = config_.fusion_input_width();
  const auto width = static_cast<std::size_t>(config_.fusion_nodes);
  for (int i = 0; i + 1 < config_.n_fusion_layers; ++i) {
    const std::string name = p + "hidden" + std::to_string(i);
    AddDenseParams(params_, name, in, width, rng);
    if (config_.batch_norm) AddBatchNormParams(params_, p + "bn" + std::to_string(i), width);
    in = width;
  }
  AddDenseParams(params_, p + "out", in, 1, rng);
}

void FusionModel::ApplyTrainability() {
  // Mid-level fusion freezes both heads; an isolated head freezes the other
  // so optimizers with weight decay leave it untouched.
  const ModelMode m = config_.mode;
  params_.SetTrainable(kVoxelPrefix, m == ModelMode::kVoxel || m == ModelMode::kCoherent);
  params_.SetTrainable(kGraphPrefix, m == ModelMode::kGraph || m == ModelMode::kCoherent);
}

namespace {

void CopyPrefix(const autodiff::ParameterStore& from, autodiff::ParameterStore& to,
                std::string_view prefix) {
  for (const auto& [name, p] : to.entries()) {
    if (!name.starts_with(prefix)) continue;
    if (!from.Contains(name)) {
      throw std::invalid_argument("head checkpoint lacks parameter " + name);
    }
    if (from.at(name).value.shape() != p.value.shape()) {
      throw std::invalid_argument("head checkpoint shape mismatch for " + name);
    }
  }
  for (const auto& [name, p] : from.entries()) {
    if (name.starts_with(prefix)) to.at(name).value = p.value;
  }
}

}  // namespace

void FusionModel::LoadVoxelHead(const FusionModel& source) {
  if (!(source.config().voxel == config_.voxel)) {
    throw std::invalid_argument("voxel head config differs from the checkpoint");
  }
  CopyPrefix(source.params(), params_, kVoxelPrefix);
  voxel_loaded_ = true;
}

void FusionModel::LoadGraphHead(const FusionModel& source) {
  if (!(source.config().graph == config_.graph)) {
    throw std::invalid_argument("graph head config differs from the checkpoint");
  }
  CopyPrefix(source.params(), params_, kGraphPrefix);
  graph_loaded_ = true;
}

NodeId FusionModel::Forward(ValueGraph& g, std::span<const data::FeaturizedComplex* const> items,
                            Mode mode) const {
  std::vector<const data::VoxelGrid*> grids;
  std::vector<const data::ComplexGraph*> graphs;
  for (const auto* it : items) {
    grids.push_back(&it->grid);
    graphs.push_back(&it->graph);
  }
  return Forward(g, grids, graphs, mode);
}

NodeId FusionModel::Forward(ValueGraph& g, std::span<const data::VoxelGrid* const> grids,
                            std::span<const data::ComplexGraph* const> graphs, Mode mode) const {
  if (grids.size() != graphs.size() || grids.empty()) {
    throw std::invalid_argument("fusion forward: need equal, non-empty grid and graph batches");
  }
  const bool bn = UseBatchNorm();
  // Frozen heads always run deterministically.
  const Mode head_mode = config_.mode == ModelMode::kMid ? Mode::kEval : mode;
  const ModelMode m = config_.mode;

  std::optional<HeadOutput> v, s;
  if (m != ModelMode::kGraph) {
    v = voxel_.Forward(g, g.Input(voxel_.Stack(grids)), head_mode, bn);
  }
  if (m != ModelMode::kVoxel) s = graph_.Forward(g, graph_.Batch(graphs));

  switch (m) {
    case ModelMode::kVoxel: return v->prediction;
    case ModelMode::kGraph: return s->prediction;
    case ModelMode::kLate: {
      const std::array<NodeId, 2> both{v->prediction, s->prediction};
      return g.Mean(both);
    }
    default: break;
  }

  const std::string p = kFusionPrefix;
  const Activation act = config_.activation;
  std::vector<NodeId> parts;
  if (config_.model_specific_layers) {
    parts.push_back(Activate(g, DenseLayer(g, s->latent, p + "graph_specific"), act));
    parts.push_back(s->latent);
    parts.push_back(Activate(g, DenseLayer(g, v->latent, p + "voxel_specific"), act));
    parts.push_back(v->latent);
  } else {
    parts = {s->latent, v->latent};
  }
  NodeId h = g.Concat(parts);
  h = g.Dropout(h, config_.dropout_early, mode);
  const int hidden = config_.n_fusion_layers - 1;
  for (int i = 0; i < hidden; ++i) {
    NodeId z = DenseLayer(g, h, p + "hidden" + std::to_string(i));
    if (config_.batch_norm && bn) z = BatchNormLayer(g, z, p + "bn" + std::to_string(i), mode);
    z = Activate(g, z, act);
    h = (config_.residual_fusion && i > 0) ? g.Add(h, z) : z;
    if (i == 0 && hidden > 1) h = g.Dropout(h, config_.dropout_mid, mode);
  }
  h = g.Dropout(h, config_.dropout_late, mode);
  return DenseLayer(g, h, p + "out");
}

void FusionModel::CheckItem(const data::FeaturizedComplex& item) const {
  if (config_.mode != ModelMode::kGraph) voxel_.CheckInput(item.grid);
  if (config_.mode != ModelMode::kVoxel) graph_.CheckInput(item.graph);
}

std::vector<ItemPrediction> FusionModel::PredictBatch(
    std::span<const data::FeaturizedComplex* const> items) const {
  std::vector<ItemPrediction> out(items.size());
  std::vector<const data::FeaturizedComplex*> good;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      if (items[i] == nullptr) throw std::invalid_argument("null item");
      CheckItem(*items[i]);
      good.push_back(items[i]);
      where.push_back(i);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  }
  if (good.empty()) return out;
  // The parameter store is only read in eval mode, so the const_cast does not
  // mutate shared state.
  ValueGraph g(const_cast<autodiff::ParameterStore*>(&params_));
  const DenseArray& pred = g.value(Forward(g, good, Mode::kEval));
  for (std::size_t j = 0; j < good.size(); ++j) out[where[j]].value = pred[j];
  return out;
}

std::vector<ItemPrediction> FusionModel::PredictBatch(
    std::span<const data::FeaturizedComplex> items) const {
  std::vector<const data::FeaturizedComplex*> ptrs;
  for (const auto& it : items) ptrs.push_back(&it);
  return PredictBatch(std::span<const data::FeaturizedComplex* const>(ptrs));
}

double FusionModel::PredictOne(const data::FeaturizedComplex& item) const {
  const data::FeaturizedComplex* p = &item;
  auto r = PredictBatch(std::span<const data::FeaturizedComplex* const>(&p, 1));
  if (!r[0].value) throw std::invalid_argument(r[0].error);
  return *r[0].value;
}

std::vector<std::string> FusionModel::OutputBiasNames() const {
  const std::string vb = std::string(kVoxelPrefix) + "out/b";
  const std::string gb = std::string(kGraphPrefix) + "dense3/b";
  switch (config_.mode) {
    case ModelMode::kVoxel: return {vb};
    case ModelMode::kGraph: return {gb};
    case ModelMode::kLate: return {vb, gb};
    default: return {std::string(kFusionPrefix) + "out/b"};
  }
}

}  // namespace fusion::models
