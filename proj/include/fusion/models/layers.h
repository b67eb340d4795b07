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

#ifndef FUSION_MODELS_LAYERS_H_
#define FUSION_MODELS_LAYERS_H_

#include <cstdint>
#include <random>
#include <string>

#include "fusion/autodiff/graph.h"
#include "fusion/autodiff/parameters.h"

namespace fusion::models {

enum class Activation : std::uint8_t { kRelu, kLeakyRelu, kSelu };

const char* ActivationName(Activation a);
Activation ParseActivation(const std::string& name);

autodiff::NodeId Activate(autodiff::ValueGraph& g, autodiff::NodeId x, Activation a);

// Fan-in scaled uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// for both weights and biases. Registers "<name>/w" [in, out] and
// "<name>/b" [out].
void AddDenseParams(autodiff::ParameterStore& store, const std::string& name, std::size_t in,
                    std::size_t out, std::mt19937_64& rng);
// Registers "<name>/w" [out, in, k, k, k] and "<name>/b" [out].
void AddConvParams(autodiff::ParameterStore& store, const std::string& name, std::size_t in,
                   std::size_t out, std::size_t kernel, std::mt19937_64& rng);
// Registers "<name>/gamma", "<name>/beta" and the running-statistic buffers.
void AddBatchNormParams(autodiff::ParameterStore& store, const std::string& name,
                        std::size_t channels);

autodiff::NodeId DenseLayer(autodiff::ValueGraph& g, autodiff::NodeId x, const std::string& name);
autodiff::NodeId ConvLayer(autodiff::ValueGraph& g, autodiff::NodeId x, const std::string& name);
autodiff::NodeId BatchNormLayer(autodiff::ValueGraph& g, autodiff::NodeId x,
                                const std::string& name, autodiff::Mode mode);

}  // namespace fusion::models

#endif  // FUSION_MODELS_LAYERS_H_
