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

#include "fusion/models/layers.h"

#include <cmath>
#include <stdexcept>

namespace fusion::models {

using autodiff::DenseArray;
using autodiff::NodeId;
using autodiff::ValueGraph;

const char* ActivationName(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky-relu";
    case Activation::kSelu: return "selu";
  }
  return "relu";
}

Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky-relu" || name == "lrelu") return Activation::kLeakyRelu;
  if (name == "selu") return Activation::kSelu;
  throw std::invalid_argument("unknown activation: " + name);
}

NodeId Activate(ValueGraph& g, NodeId x, Activation a) {
  switch (a) {
    case Activation::kRelu: return g.Relu(x);
    case Activation::kLeakyRelu: return g.LeakyRelu(x);
    case Activation::kSelu: return g.Selu(x);
  }
  return g.Relu(x);
}

namespace {

DenseArray Uniform(autodiff::Shape shape, double bound, std::mt19937_64& rng) {
  DenseArray a(std::move(shape));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : a.data()) v = u(rng);
  return a;
}

}  // namespace

void AddDenseParams(autodiff::ParameterStore& store, const std::string& name, std::size_t in,
                    std::size_t out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  store.Add(name + "/w", Uniform({in, out}, bound, rng));
  store.Add(name + "/b", Uniform({out}, bound, rng));
}

void AddConvParams(autodiff::ParameterStore& store, const std::string& name, std::size_t in,
                   std::size_t out, std::size_t kernel, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel * kernel));
  store.Add(name + "/w", Uniform({out, in, kernel, kernel, kernel}, bound, rng));
  store.Add(name + "/b", Uniform({out}, bound, rng));
}

void AddBatchNormParams(autodiff::ParameterStore& store, const std::string& name,
                        std::size_t channels) {
  DenseArray ones({channels});
  ones.Fill(1.0);
  store.Add(name + "/gamma", ones);
  store.Add(name + "/beta", DenseArray({channels}));
  store.AddBuffer(name + "/running_mean", DenseArray({channels}));
  store.AddBuffer(name + "/running_var", ones);
}

NodeId DenseLayer(ValueGraph& g, NodeId x, const std::string& name) {
  return g.Dense(x, g.Param(name + "/w"), g.Param(name + "/b"));
}

NodeId ConvLayer(ValueGraph& g, NodeId x, const std::string& name) {
  return g.Conv3d(x, g.Param(name + "/w"), g.Param(name + "/b"));
}

NodeId BatchNormLayer(ValueGraph& g, NodeId x, const std::string& name, autodiff::Mode mode) {
  return g.BatchNorm(x, g.Param(name + "/gamma"), g.Param(name + "/beta"),
                     g.Param(name + "/running_mean"), g.Param(name + "/running_var"), mode);
}

}  // namespace fusion::models
