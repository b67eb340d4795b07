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

#ifndef FUSION_AUTODIFF_GRAPH_H_
#define FUSION_AUTODIFF_GRAPH_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fusion/autodiff/dense_array.h"
#include "fusion/autodiff/parameters.h"

namespace fusion::autodiff {

enum class OpKind {
  kInput,
  kParameter,
  kDense,
  kConv3d,
  kMaxPool3d,
  kRelu,
  kLeakyRelu,
  kSelu,
  kSigmoid,
  kTanh,
  kBatchNorm,
  kDropout,
  kConcat,
  kAdd,
  kSub,
  kMul,
  kMean,
  kSum,
  kMseLoss,
  kReshape,
  kGatherRows,
  kSegmentSum,
};

std::string_view OpKindName(OpKind kind);
// Throws std::invalid_argument for names that do not denote an op.
OpKind ParseOpKind(std::string_view name);

enum class Mode { kTrain, kEval };

inline constexpr double kLeakyReluSlope = 0.01;
inline constexpr double kSeluAlpha = 1.6732632423543772848170429916717;
inline constexpr double kSeluScale = 1.0507009873554804934193349852946;

struct OpAttrs {
  Mode mode = Mode::kEval;
  // Dropout probability of zeroing an element.
  double rate = 0.0;
  // Max-pool window (equal to its stride).
  std::size_t window = 2;
  // Batch-norm running-statistic momentum and variance epsilon.
  double momentum = 0.1;
  double epsilon = 1e-5;
  // Target shape for reshape.
  Shape shape;
  // Row indices for gather-rows; segment ids for segment-sum.
  std::vector<std::size_t> indices;
  std::size_t segments = 0;
};

using NodeId = std::size_t;

// Eager reverse-mode tape. Each Apply computes its output immediately and
// records enough to replay the forward pass and to backpropagate.
//
// Parameter nodes read from the bound ParameterStore; Replay() re-reads them,
// which is what finite-difference checks perturb. Batch-norm in train mode
// updates the store's running-statistic buffers as a side effect.
class ValueGraph {
 public:
  explicit ValueGraph(ParameterStore* params = nullptr, std::uint64_t seed = 0);

  NodeId Input(DenseArray value);
  NodeId Param(std::string_view name);
  NodeId Apply(OpKind kind, std::span<const NodeId> inputs, const OpAttrs& attrs = {});
  NodeId Apply(OpKind kind, std::initializer_list<NodeId> inputs,
               const OpAttrs& attrs = {}) {
    return Apply(kind, std::span<const NodeId>(inputs.begin(), inputs.size()), attrs);
  }

  NodeId Dense(NodeId x, NodeId weight, NodeId bias);
  NodeId Conv3d(NodeId x, NodeId weight, NodeId bias);
  NodeId MaxPool3d(NodeId x, std::size_t window);
  NodeId Relu(NodeId x);
  NodeId LeakyRelu(NodeId x);
  NodeId Selu(NodeId x);
  NodeId Sigmoid(NodeId x);
  NodeId Tanh(NodeId x);
  NodeId BatchNorm(NodeId x, NodeId gamma, NodeId beta, NodeId running_mean,
                   NodeId running_var, Mode mode);
  NodeId Dropout(NodeId x, double rate, Mode mode);
  NodeId Concat(std::span<const NodeId> parts);
  NodeId Add(NodeId a, NodeId b);
  NodeId Sub(NodeId a, NodeId b);
  NodeId Mul(NodeId a, NodeId b);
  NodeId Mean(std::span<const NodeId> parts);
  NodeId Sum(NodeId x);
  NodeId MseLoss(NodeId prediction, NodeId target);
  NodeId Reshape(NodeId x, Shape shape);
  NodeId GatherRows(NodeId x, std::vector<std::size_t> rows);
  NodeId SegmentSum(NodeId x, std::vector<std::size_t> segment_ids,
                    std::size_t segments);

  const DenseArray& value(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  ParameterStore* params() const { return params_; }

  // Gradients of a scalar node with respect to every trainable parameter in
  // the bound store. Parameters the loss does not reach get zeros.
  GradientMap Backward(NodeId loss);

  // Recomputes every node in order using current parameter values.
  void Replay();

  // True if some node draws random numbers (dropout in train mode, rate > 0).
  bool HasStochasticOps() const;
  // True if some batch-norm node runs in train mode.
  bool HasTrainModeNorm() const;

 private:
  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    OpAttrs attrs;
    std::string param_name;
    DenseArray value;
    // Op-specific saved state: dropout mask, normalized activations, etc.
    DenseArray aux;
    std::vector<std::size_t> argmax;
    std::vector<double> stats;
  };

  NodeId Push(Node node);
  void Forward(Node& node);
  void BackwardNode(const Node& node, const DenseArray& grad,
                    std::vector<DenseArray>& grads) const;

  std::vector<Node> nodes_;
  std::vector<bool> requires_grad_;
  ParameterStore* params_;
  std::mt19937_64 rng_;
};

}  // namespace fusion::autodiff

#endif  // FUSION_AUTODIFF_GRAPH_H_
