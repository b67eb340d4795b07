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

#include "fusion/hpo/space.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "fusion/data/rng.h"

namespace fusion::hpo {

using nlohmann::json;

Dimension Dimension::Continuous(std::string name, double low, double high, Scale scale,
                                bool mutable_after_init) {
  Dimension d;
  d.name = std::move(name);
  d.kind = DimKind::kContinuous;
  d.low = low;
  d.high = high;
  d.scale = scale;
  d.mutable_after_init = mutable_after_init;
  return d;
}

Dimension Dimension::Categorical(std::string name, std::vector<json> choices,
                                 bool mutable_after_init) {
  Dimension d;
  d.name = std::move(name);
  d.kind = DimKind::kCategorical;
  d.choices = std::move(choices);
  d.mutable_after_init = mutable_after_init;
  return d;
}

Dimension Dimension::Boolean(std::string name, bool mutable_after_init) {
  Dimension d;
  d.name = std::move(name);
  d.kind = DimKind::kBoolean;
  d.mutable_after_init = mutable_after_init;
  return d;
}

double Dimension::Normalize(double value) const {
  if (scale == Scale::kLog) {
    return (std::log(value) - std::log(low)) / (std::log(high) - std::log(low));
  }
  return (value - low) / (high - low);
}

double Dimension::Denormalize(double unit) const {
  unit = std::clamp(unit, 0.0, 1.0);
  double v = scale == Scale::kLog
                 ? std::exp(std::log(low) + unit * (std::log(high) - std::log(low)))
                 : low + unit * (high - low);
  return std::clamp(v, low, high);
}

bool Dimension::Contains(const json& value) const {
  switch (kind) {
    case DimKind::kBoolean: return value.is_boolean();
    case DimKind::kCategorical:
      return std::find(choices.begin(), choices.end(), value) != choices.end();
    case DimKind::kContinuous:
      return value.is_number() && value.get<double>() >= low && value.get<double>() <= high;
  }
  return false;
}

HyperParamSpace::HyperParamSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  std::set<std::string> names;
  for (const Dimension& d : dims_) {
    if (d.name.empty()) throw std::invalid_argument("search space: empty dimension name");
    if (!names.insert(d.name).second) {
      throw std::invalid_argument("search space: duplicate dimension " + d.name);
    }
    if (d.kind == DimKind::kCategorical && d.choices.empty()) {
      throw std::invalid_argument("search space: categorical " + d.name + " has no values");
    }
    if (d.kind == DimKind::kContinuous) {
      if (!(d.low < d.high) || !std::isfinite(d.low) || !std::isfinite(d.high)) {
        throw std::invalid_argument("search space: " + d.name + " needs low < high");
      }
      if (d.scale == Scale::kLog && !(d.low > 0)) {
        throw std::invalid_argument("search space: log-scale " + d.name + " needs low > 0");
      }
    }
  }
}

const Dimension& HyperParamSpace::at(const std::string& name) const {
  for (const Dimension& d : dims_) {
    if (d.name == name) return d;
  }
  throw std::out_of_range("search space has no dimension " + name);
}

std::vector<std::size_t> HyperParamSpace::ContinuousIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i].kind == DimKind::kContinuous) out.push_back(i);
  }
  return out;
}

Assignment HyperParamSpace::Sample(std::mt19937_64& rng) const {
  Assignment a = json::object();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const Dimension& d : dims_) {
    switch (d.kind) {
      case DimKind::kBoolean: a[d.name] = unit(rng) < 0.5; break;
      case DimKind::kCategorical:
        a[d.name] = d.choices[std::uniform_int_distribution<std::size_t>(
            0, d.choices.size() - 1)(rng)];
        break;
      case DimKind::kContinuous: a[d.name] = d.Denormalize(unit(rng)); break;
    }
  }
  return a;
}

void HyperParamSpace::CheckAssignment(const Assignment& a) const {
  for (const Dimension& d : dims_) {
    if (!a.contains(d.name) || !d.Contains(a.at(d.name))) {
      throw std::invalid_argument("assignment violates dimension " + d.name);
    }
  }
}

namespace {

const char* KindName(DimKind k) {
  switch (k) {
    case DimKind::kCategorical: return "categorical";
    case DimKind::kBoolean: return "boolean";
    case DimKind::kContinuous: return "continuous";
  }
  return "continuous";
}

}  // namespace

json HyperParamSpace::ToJson() const {
  json dims = json::array();
  for (const Dimension& d : dims_) {
    json j{{"name", d.name}, {"kind", KindName(d.kind)}, {"mutable", d.mutable_after_init}};
    if (d.kind == DimKind::kCategorical) j["values"] = d.choices;
    if (d.kind == DimKind::kContinuous) {
      j["low"] = d.low;
      j["high"] = d.high;
      j["scale"] = d.scale == Scale::kLog ? "log" : "linear";
    }
    dims.push_back(std::move(j));
  }
  return json{{"dimensions", dims}};
}

HyperParamSpace HyperParamSpace::FromJson(const json& j) {
  std::vector<Dimension> dims;
  for (const json& d : j.at("dimensions")) {
    const std::string kind = d.at("kind").get<std::string>();
    const std::string name = d.at("name").get<std::string>();
    const bool mut = d.value("mutable", true);
    if (kind == "continuous") {
      const std::string scale = d.value("scale", std::string("linear"));
      if (scale != "linear" && scale != "log") {
        throw std::invalid_argument("search space: unknown scale " + scale);
      }
      dims.push_back(Dimension::Continuous(name, d.at("low").get<double>(),
                                           d.at("high").get<double>(),
                                           scale == "log" ? Scale::kLog : Scale::kLinear, mut));
    } else if (kind == "categorical") {
      dims.push_back(Dimension::Categorical(name, d.at("values").get<std::vector<json>>(), mut));
    } else if (kind == "boolean") {
      dims.push_back(Dimension::Boolean(name, mut));
    } else {
      throw std::invalid_argument("search space: unknown kind " + kind);
    }
  }
  return HyperParamSpace(std::move(dims));
}

HyperParamSpace HyperParamSpace::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open search space " + path.string());
  try {
    return FromJson(json::parse(in));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::vector<Assignment> SampleInitialPopulation(const HyperParamSpace& space, std::size_t n,
                                                std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("population size must be >= 2");
  std::vector<Assignment> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(MixSeed(seed, i));
    out.push_back(space.Sample(rng));
  }
  return out;
}

HyperParamSpace PresetSpace(const std::string& column) {
  using D = Dimension;
  const std::vector<json> gather{8, 24, 40, 64, 88, 104, 128};
  const std::vector<json> ks{2, 3, 4, 5, 6, 7, 8};
  auto graph_dims = [&](std::vector<Dimension>& d) {
    d.push_back(D::Categorical("graph.k_cov", ks, false));
    d.push_back(D::Categorical("graph.k_noncov", ks, false));
    d.push_back(D::Continuous("graph.covalent_threshold", 1.2, 5.9, Scale::kLinear, false));
    d.push_back(D::Continuous("graph.noncovalent_threshold", 1.2, 5.9, Scale::kLinear, false));
    d.push_back(D::Categorical("graph.gather_width_cov", gather, false));
    d.push_back(D::Categorical("graph.gather_width_noncov", gather, false));
  };
  auto voxel_dims = [&](std::vector<Dimension>& d) {
    d.push_back(D::Boolean("voxel.residual_1", false));
    d.push_back(D::Boolean("voxel.residual_2", false));
    d.push_back(D::Categorical("voxel.conv_filters_1", {32, 64, 96}, false));
    d.push_back(D::Categorical("voxel.conv_filters_2", {64, 96, 128}, false));
  };
  std::vector<Dimension> d;
  if (column == "3d") {
    d.push_back(D::Categorical("batch_size", {8, 12, 24}));
    d.push_back(D::Continuous("optimizer.learning_rate", 1e-6, 1e-4, Scale::kLog));
    d.push_back(D::Boolean("voxel.batch_norm", false));
    d.push_back(D::Categorical("voxel.dense_nodes", {40, 64, 88, 104, 128}, false));
    voxel_dims(d);
  } else if (column == "sg") {
    d.push_back(D::Categorical("batch_size", {4, 8, 12, 16}));
    d.push_back(D::Continuous("optimizer.learning_rate", 2e-4, 2e-2, Scale::kLog));
    graph_dims(d);
  } else if (column == "fusion") {
    d.push_back(D::Categorical("optimizer.kind", {"adam", "adamw", "rmsprop", "adadelta"}));
    d.push_back(D::Categorical("activation", {"relu", "leaky-relu", "selu"}, false));
    d.push_back(D::Categorical(
        "batch_size", {1, 2, 4, 5, 8, 12, 16, 24, 28, 34, 38, 48, 56}));
    d.push_back(D::Continuous("optimizer.learning_rate", 1e-8, 1e-3, Scale::kLog));
    d.push_back(D::Boolean("model_specific_layers", false));
    d.push_back(D::Boolean("pre_trained", false));
    d.push_back(D::Boolean("batch_norm", false));
    d.push_back(D::Continuous("dropout_early", 0.0, 0.5, Scale::kLinear));
    d.push_back(D::Continuous("dropout_mid", 0.0, 0.25, Scale::kLinear));
    d.push_back(D::Continuous("dropout_late", 0.0, 0.125, Scale::kLinear));
    d.push_back(D::Categorical("n_fusion_layers", {3, 4, 5}, false));
    d.push_back(D::Categorical("fusion_nodes", gather, false));
    d.push_back(D::Boolean("residual_fusion", false));
    voxel_dims(d);
    graph_dims(d);
  } else {
    throw std::invalid_argument("unknown preset " + column + " (want 3d|sg|fusion)");
  }
  return HyperParamSpace(std::move(d));
}

json ApplyAssignment(json config, const Assignment& a) {
  for (const auto& [name, value] : a.items()) {
    std::string pointer = "/" + name;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const json::json_pointer ptr(pointer);
    if (name.ends_with("optimizer.kind")) {
      // Coefficients tuned for one optimizer make no sense for another.
      const json::json_pointer parent = ptr.parent_pointer();
      json fresh{{"kind", value}};
      if (config.contains(parent) && config.at(parent).contains("learning_rate")) {
        fresh["learning_rate"] = config.at(parent).at("learning_rate");
      }
      config[parent] = std::move(fresh);
    } else {
      config[ptr] = value;
    }
  }
  return config;
}

}  // namespace fusion::hpo
