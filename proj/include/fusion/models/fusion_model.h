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

#ifndef FUSION_MODELS_FUSION_MODEL_H_
#define FUSION_MODELS_FUSION_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusion/autodiff/graph.h"
#include "fusion/autodiff/optimizer.h"
#include "fusion/autodiff/parameters.h"
#include "fusion/data/featurize.h"
#include "fusion/models/graph_head.h"
#include "fusion/models/layers.h"
#include "fusion/models/voxel_head.h"

namespace fusion::models {

// kVoxel and kGraph are the isolated heads; the other three are the fusion
// strategies.
enum class ModelMode : std::uint8_t { kVoxel, kGraph, kLate, kMid, kCoherent };

const char* ModelModeName(ModelMode m);  // "3d", "sg", "late", "mid", "coherent"
ModelMode ParseModelMode(const std::string& name);

// Batch sizes listed for the fusion search.
inline constexpr int kFusionBatchSizes[] = {1, 2, 4, 5, 8, 12, 16, 24, 28, 34, 38, 48, 56};

struct FusionConfig {
  ModelMode mode = ModelMode::kCoherent;
  // Counts every dense layer after the concatenation, including the output.
  int n_fusion_layers = 4;
  int fusion_nodes = 64;
  bool model_specific_layers = false;
  bool residual_fusion = false;
  bool batch_norm = false;
  Activation activation = Activation::kSelu;
  double dropout_early = 0.0;
  double dropout_mid = 0.0;
  double dropout_late = 0.0;
  bool pre_trained = false;
  autodiff::OptimizerConfig optimizer =
      autodiff::OptimizerConfig::Defaults(autodiff::OptimizerKind::kAdam, 1e-3);
  int batch_size = 16;
  int epochs = 10;
  // Per-axis probability of a random 90-degree turn of training grids.
  double rotation_probability = 0.1;

  VoxelHeadConfig voxel;
  GraphHeadConfig graph;

  bool uses_fusion_layers() const {
    return mode == ModelMode::kMid || mode == ModelMode::kCoherent;
  }
  std::size_t fusion_input_width() const;
  void Validate() const;
  // Additionally checks the head configs and the fusion options against the
  // reference search domain.
  void ValidateSearchDomain() const;

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

// Final tuned configurations; heads are the reference 3D-CNN and SG-CNN.
FusionConfig ReferenceVoxelConfig();
FusionConfig ReferenceGraphConfig();
FusionConfig ReferenceMidConfig();
FusionConfig ReferenceCoherentConfig();

// Desk-scale preset: G = 8 grid, 3^3 kernels, 4/8 filters, a narrow graph
// head and 16-node fusion layers. Trains in seconds per epoch on one core.
FusionConfig DeskConfig(ModelMode mode);

// Featurization matching a model's input shapes and graph thresholds.
data::FeaturizerConfig FeaturizerFor(const FusionConfig& config);

double LateFusionPredict(double p_voxel, double p_graph);

struct ItemPrediction {
  std::optional<double> value;
  std::string error;
};

class FusionModel {
 public:
  FusionModel(FusionConfig config, std::uint64_t seed);

  const FusionConfig& config() const { return config_; }
  autodiff::ParameterStore& params() { return params_; }
  const autodiff::ParameterStore& params() const { return params_; }
  const VoxelHead& voxel_head() const { return voxel_; }
  const GraphHead& graph_head() const { return graph_; }

  bool voxel_loaded() const { return voxel_loaded_; }
  bool graph_loaded() const { return graph_loaded_; }
  // Copies the "voxel/" or "graph/" parameters from a trained model whose
  // head config matches.
  void LoadVoxelHead(const FusionModel& source);
  void LoadGraphHead(const FusionModel& source);
  void MarkHeadsLoaded(bool voxel, bool graph) {
    voxel_loaded_ = voxel;
    graph_loaded_ = graph;
  }

  // Marks which parameter groups the mode trains.
  void ApplyTrainability();

  // Builds the forward pass for a batch; returns a [B, 1] node.
  autodiff::NodeId Forward(autodiff::ValueGraph& g,
                           std::span<const data::FeaturizedComplex* const> items,
                           autodiff::Mode mode) const;
  // Same as Forward but with externally supplied (for example rotated) grids.
  autodiff::NodeId Forward(autodiff::ValueGraph& g,
                           std::span<const data::VoxelGrid* const> grids,
                           std::span<const data::ComplexGraph* const> graphs,
                           autodiff::Mode mode) const;

  // Rejects items the model cannot score, with a reason.
  void CheckItem(const data::FeaturizedComplex& item) const;

  // Eval-mode prediction. Malformed items produce an error record and do not
  // affect the others; order is preserved.
  std::vector<ItemPrediction> PredictBatch(
      std::span<const data::FeaturizedComplex* const> items) const;
  std::vector<ItemPrediction> PredictBatch(std::span<const data::FeaturizedComplex> items) const;
  double PredictOne(const data::FeaturizedComplex& item) const;

  // Name of the output bias that sets the prediction offset for this mode.
  std::vector<std::string> OutputBiasNames() const;

  // Fingerprint of the parameters under a prefix ("voxel/", "graph/",
  // "fusion/").
  std::uint64_t Fingerprint(std::string_view prefix) const { return params_.Fingerprint(prefix); }

  static constexpr const char* kVoxelPrefix = "voxel/";
  static constexpr const char* kGraphPrefix = "graph/";
  static constexpr const char* kFusionPrefix = "fusion/";

 private:
  bool UseBatchNorm() const { return config_.batch_size >= 2; }
  void InitFusionParams(std::uint64_t seed);

  FusionConfig config_;
  VoxelHead voxel_;
  GraphHead graph_;
  autodiff::ParameterStore params_;
  bool voxel_loaded_ = false;
  bool graph_loaded_ = false;
};

}  // namespace fusion::models

#endif  // FUSION_MODELS_FUSION_MODEL_H_
