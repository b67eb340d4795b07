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

#include "fusion/models/model_io.h"

#include <fstream>
#include <set>
#include <stdexcept>

#include "fusion/autodiff/checkpoint.h"

namespace fusion::models {

using nlohmann::json;

namespace {

void RejectUnknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected an object");
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw std::invalid_argument(std::string(what) + ": unknown key " + key);
  }
}

template <typename T>
void Read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json ToJson(const autodiff::OptimizerConfig& c) {
  return json{{"kind", std::string(autodiff::OptimizerKindName(c.kind))},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"weight_decay", c.weight_decay},
              {"decay", c.decay}};
}

autodiff::OptimizerConfig OptimizerConfigFromJson(const json& j) {
  RejectUnknown(j, {"kind", "learning_rate", "beta1", "beta2", "epsilon", "weight_decay", "decay"},
                "optimizer");
  const auto kind = autodiff::ParseOptimizerKind(j.value("kind", std::string("adam")));
  auto c = autodiff::OptimizerConfig::Defaults(kind, j.value("learning_rate", 1e-3));
  Read(j, "beta1", c.beta1);
  Read(j, "beta2", c.beta2);
  Read(j, "epsilon", c.epsilon);
  Read(j, "weight_decay", c.weight_decay);
  Read(j, "decay", c.decay);
  c.Validate();
  return c;
}

json ToJson(const VoxelHeadConfig& c) {
  return json{{"grid_extent", c.grid_extent},       {"channels", c.channels},
              {"kernel_1", c.kernel_1},             {"kernel_2", c.kernel_2},
              {"conv_filters_1", c.conv_filters_1}, {"conv_filters_2", c.conv_filters_2},
              {"dense_nodes", c.dense_nodes},       {"residual_1", c.residual_1},
              {"residual_2", c.residual_2},         {"batch_norm", c.batch_norm},
              {"dropout_early", c.dropout_early},   {"dropout_mid", c.dropout_mid}};
}

VoxelHeadConfig VoxelHeadConfigFromJson(const json& j) {
  RejectUnknown(j,
                {"grid_extent", "channels", "kernel_1", "kernel_2", "conv_filters_1",
                 "conv_filters_2", "dense_nodes", "residual_1", "residual_2", "batch_norm",
                 "dropout_early", "dropout_mid"},
                "voxel head");
  VoxelHeadConfig c;
  Read(j, "grid_extent", c.grid_extent);
  Read(j, "channels", c.channels);
  Read(j, "kernel_1", c.kernel_1);
  Read(j, "kernel_2", c.kernel_2);
  Read(j, "conv_filters_1", c.conv_filters_1);
  Read(j, "conv_filters_2", c.conv_filters_2);
  Read(j, "dense_nodes", c.dense_nodes);
  Read(j, "residual_1", c.residual_1);
  Read(j, "residual_2", c.residual_2);
  Read(j, "batch_norm", c.batch_norm);
  Read(j, "dropout_early", c.dropout_early);
  Read(j, "dropout_mid", c.dropout_mid);
  c.Validate();
  return c;
}

json ToJson(const GraphHeadConfig& c) {
  return json{{"node_feature_width", c.node_feature_width},
              {"k_cov", c.k_cov},
              {"k_noncov", c.k_noncov},
              {"gather_width_cov", c.gather_width_cov},
              {"gather_width_noncov", c.gather_width_noncov},
              {"covalent_threshold", c.covalent_threshold},
              {"noncovalent_threshold", c.noncovalent_threshold}};
}

GraphHeadConfig GraphHeadConfigFromJson(const json& j) {
  RejectUnknown(j,
                {"node_feature_width", "k_cov", "k_noncov", "gather_width_cov",
                 "gather_width_noncov", "covalent_threshold", "noncovalent_threshold"},
                "graph head");
  GraphHeadConfig c;
  Read(j, "node_feature_width", c.node_feature_width);
  Read(j, "k_cov", c.k_cov);
  Read(j, "k_noncov", c.k_noncov);
  Read(j, "gather_width_cov", c.gather_width_cov);
  Read(j, "gather_width_noncov", c.gather_width_noncov);
  Read(j, "covalent_threshold", c.covalent_threshold);
  Read(j, "noncovalent_threshold", c.noncovalent_threshold);
  c.Validate();
  return c;
}

json ToJson(const FusionConfig& c) {
  return json{{"mode", ModelModeName(c.mode)},
              {"n_fusion_layers", c.n_fusion_layers},
              {"fusion_nodes", c.fusion_nodes},
              {"model_specific_layers", c.model_specific_layers},
              {"residual_fusion", c.residual_fusion},
              {"batch_norm", c.batch_norm},
              {"activation", ActivationName(c.activation)},
              {"dropout_early", c.dropout_early},
              {"dropout_mid", c.dropout_mid},
              {"dropout_late", c.dropout_late},
              {"pre_trained", c.pre_trained},
              {"optimizer", ToJson(c.optimizer)},
              {"batch_size", c.batch_size},
              {"epochs", c.epochs},
              {"rotation_probability", c.rotation_probability},
              {"voxel", ToJson(c.voxel)},
              {"graph", ToJson(c.graph)}};
}

FusionConfig FusionConfigFromJson(const json& j) {
  RejectUnknown(j,
                {"mode", "n_fusion_layers", "fusion_nodes", "model_specific_layers",
                 "residual_fusion", "batch_norm", "activation", "dropout_early", "dropout_mid",
                 "dropout_late", "pre_trained", "optimizer", "batch_size", "epochs",
                 "rotation_probability", "voxel", "graph"},
                "fusion config");
  FusionConfig c;
  if (j.contains("mode")) c.mode = ParseModelMode(j.at("mode").get<std::string>());
  Read(j, "n_fusion_layers", c.n_fusion_layers);
  Read(j, "fusion_nodes", c.fusion_nodes);
  Read(j, "model_specific_layers", c.model_specific_layers);
  Read(j, "residual_fusion", c.residual_fusion);
  Read(j, "batch_norm", c.batch_norm);
  if (j.contains("activation")) c.activation = ParseActivation(j.at("activation"));
  Read(j, "dropout_early", c.dropout_early);
  Read(j, "dropout_mid", c.dropout_mid);
  Read(j, "dropout_late", c.dropout_late);
  Read(j, "pre_trained", c.pre_trained);
  if (j.contains("optimizer")) c.optimizer = OptimizerConfigFromJson(j.at("optimizer"));
  Read(j, "batch_size", c.batch_size);
  Read(j, "epochs", c.epochs);
  Read(j, "rotation_probability", c.rotation_probability);
  if (j.contains("voxel")) c.voxel = VoxelHeadConfigFromJson(j.at("voxel"));
  if (j.contains("graph")) c.graph = GraphHeadConfigFromJson(j.at("graph"));
  c.Validate();
  return c;
}

FusionConfig LoadFusionConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  try {
    return FusionConfigFromJson(json::parse(in));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void SaveModel(const std::filesystem::path& path, const FusionModel& model) {
  autodiff::Checkpoint ck;
  ck.params = model.params();
  const json meta{{"config", ToJson(model.config())},
                  {"voxel_loaded", model.voxel_loaded()},
                  {"graph_loaded", model.graph_loaded()}};
  ck.metadata = meta.dump();
  autodiff::SaveCheckpoint(path, ck);
  std::ofstream sidecar(path.string() + ".json", std::ios::trunc);
  sidecar << meta.dump(2) << '\n';
  if (!sidecar) throw std::runtime_error("failed writing config sidecar for " + path.string());
}

FusionModel LoadModel(const std::filesystem::path& path) {
  autodiff::Checkpoint ck = autodiff::LoadCheckpoint(path);
  const json meta = json::parse(ck.metadata);
  FusionModel model(FusionConfigFromJson(meta.at("config")), 0);
  auto& store = model.params();
  if (store.size() != ck.params.size()) {
    throw std::runtime_error("model checkpoint layout does not match its config");
  }
  for (const auto& [name, p] : ck.params.entries()) {
    if (!store.Contains(name) || store.at(name).value.shape() != p.value.shape()) {
      throw std::runtime_error("model checkpoint parameter mismatch at " + name);
    }
    store.at(name).value = p.value;
  }
  model.MarkHeadsLoaded(meta.value("voxel_loaded", false), meta.value("graph_loaded", false));
  return model;
}

}  // namespace fusion::models
