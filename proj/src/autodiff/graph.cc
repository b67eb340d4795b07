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

#include "fusion/autodiff/graph.h"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace fusion::autodiff {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

constexpr std::array<std::pair<OpKind, std::string_view>, 22> kOpNames = {{
    {OpKind::kInput, "input"},
    {OpKind::kParameter, "parameter"},
    {OpKind::kDense, "dense"},
    {OpKind::kConv3d, "conv3d"},
    {OpKind::kMaxPool3d, "max-pool3d"},
    {OpKind::kRelu, "relu"},
    {OpKind::kLeakyRelu, "leaky-relu"},
    {OpKind::kSelu, "selu"},
    {OpKind::kSigmoid, "sigmoid"},
    {OpKind::kTanh, "tanh"},
    {OpKind::kBatchNorm, "batch-norm"},
    {OpKind::kDropout, "dropout"},
    {OpKind::kConcat, "concat"},
    {OpKind::kAdd, "elementwise-add"},
    {OpKind::kSub, "elementwise-sub"},
    {OpKind::kMul, "elementwise-mul"},
    {OpKind::kMean, "arithmetic-mean"},
    {OpKind::kSum, "sum"},
    {OpKind::kMseLoss, "mse-loss"},
    {OpKind::kReshape, "reshape"},
    {OpKind::kGatherRows, "gather-rows"},
    {OpKind::kSegmentSum, "segment-sum"},
}};

[[noreturn]] void ShapeError(OpKind kind, const std::string& detail) {
  throw std::invalid_argument(std::string(OpKindName(kind)) + ": " + detail);
}

std::string Describe(std::initializer_list<const DenseArray*> arrays) {
  std::string out;
  for (const DenseArray* a : arrays) {
    if (!out.empty()) out += " vs ";
    out += ShapeToString(a->shape());
  }
  return out;
}

void ExpectArity(OpKind kind, std::size_t got, std::size_t want) {
  if (got != want) {
    ShapeError(kind, "expected " + std::to_string(want) + " inputs, got " +
                         std::to_string(got));
  }
}

// Channel-axis layout for batch-norm: [batch, channels, inner...].
struct NormLayout {
  std::size_t batch;
  std::size_t channels;
  std::size_t inner;
};

NormLayout LayoutOf(const DenseArray& x) {
  NormLayout l{x.dim(0), x.dim(1), 1};
  for (std::size_t i = 2; i < x.rank(); ++i) l.inner *= x.dim(i);
  return l;
}

// Volumetric geometry shared by conv3d and pooling.
struct Volume {
  std::size_t d, h, w;
  std::size_t voxels() const { return d * h * w; }
};

// Expands one sample [C, D, H, W] into columns [C*k^3, D*H*W] for a
// stride-1, extent-preserving convolution with cubic kernel k.
void Im2Col(const double* x, std::size_t channels, Volume v, std::size_t k,
            double* cols) {
  const long pad = static_cast<long>(k / 2);
  const std::size_t vox = v.voxels();
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* xc = x + c * vox;
    for (std::size_t kd = 0; kd < k; ++kd) {
      for (std::size_t kh = 0; kh < k; ++kh) {
        for (std::size_t kw = 0; kw < k; ++kw, ++row) {
          double* out = cols + row * vox;
          for (std::size_t od = 0; od < v.d; ++od) {
            const long id = static_cast<long>(od + kd) - pad;
            for (std::size_t oh = 0; oh < v.h; ++oh) {
              const long ih = static_cast<long>(oh + kh) - pad;
              double* dst = out + (od * v.h + oh) * v.w;
              if (id < 0 || id >= static_cast<long>(v.d) || ih < 0 ||
                  ih >= static_cast<long>(v.h)) {
                std::fill(dst, dst + v.w, 0.0);
                continue;
              }
              const double* src = xc + (id * v.h + ih) * v.w;
              for (std::size_t ow = 0; ow < v.w; ++ow) {
                const long iw = static_cast<long>(ow + kw) - pad;
                dst[ow] = (iw < 0 || iw >= static_cast<long>(v.w)) ? 0.0 : src[iw];
              }
            }
          }
        }
      }
    }
  }
}

void Col2ImAdd(const double* cols, std::size_t channels, Volume v, std::size_t k,
               double* x) {
  const long pad = static_cast<long>(k / 2);
  const std::size_t vox = v.voxels();
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    double* xc = x + c * vox;
    for (std::size_t kd = 0; kd < k; ++kd) {
      for (std::size_t kh = 0; kh < k; ++kh) {
        for (std::size_t kw = 0; kw < k; ++kw, ++row) {
          const double* in = cols + row * vox;
          for (std::size_t od = 0; od < v.d; ++od) {
            const long id = static_cast<long>(od + kd) - pad;
            if (id < 0 || id >= static_cast<long>(v.d)) continue;
            for (std::size_t oh = 0; oh < v.h; ++oh) {
              const long ih = static_cast<long>(oh + kh) - pad;
              if (ih < 0 || ih >= static_cast<long>(v.h)) continue;
              const double* src = in + (od * v.h + oh) * v.w;
              double* dst = xc + (id * v.h + ih) * v.w;
              for (std::size_t ow = 0; ow < v.w; ++ow) {
                const long iw = static_cast<long>(ow + kw) - pad;
                if (iw >= 0 && iw < static_cast<long>(v.w)) dst[iw] += src[ow];
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

std::string_view OpKindName(OpKind kind) {
  for (const auto& [k, name] : kOpNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

OpKind ParseOpKind(std::string_view name) {
  for (const auto& [k, n] : kOpNames) {
    if (n == name) return k;
  }
  throw std::invalid_argument("unknown op kind: " + std::string(name));
}

ValueGraph::ValueGraph(ParameterStore* params, std::uint64_t seed)
    : params_(params), rng_(seed) {}

NodeId ValueGraph::Push(Node node) {
  Forward(node);
  if (!node.value.AllFinite()) {
    throw std::runtime_error(std::string(OpKindName(node.kind)) +
                             ": non-finite value in output " +
                             ShapeToString(node.value.shape()));
  }
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId ValueGraph::Input(DenseArray value) {
  if (!value.AllFinite()) {
    throw std::invalid_argument("input: non-finite value");
  }
  Node node{OpKind::kInput, {}, {}, {}, std::move(value), {}, {}, {}};
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId ValueGraph::Param(std::string_view name) {
  if (params_ == nullptr) {
    throw std::logic_error("parameter node requires a bound ParameterStore");
  }
  Node node{OpKind::kParameter, {}, {}, std::string(name), {}, {}, {}, {}};
  return Push(std::move(node));
}

NodeId ValueGraph::Apply(OpKind kind, std::span<const NodeId> inputs,
                         const OpAttrs& attrs) {
  if (kind == OpKind::kInput || kind == OpKind::kParameter) {
    throw std::invalid_argument("apply: use Input()/Param() for leaf nodes");
  }
  for (NodeId id : inputs) {
    if (id >= nodes_.size()) {
      throw std::invalid_argument(std::string(OpKindName(kind)) +
                                  ": input node id out of range");
    }
  }
  Node node{kind, std::vector<NodeId>(inputs.begin(), inputs.end()), attrs, {}, {}, {}, {}, {}};
  return Push(std::move(node));
}

NodeId ValueGraph::Dense(NodeId x, NodeId weight, NodeId bias) {
  return Apply(OpKind::kDense, {x, weight, bias});
}
NodeId ValueGraph::Conv3d(NodeId x, NodeId weight, NodeId bias) {
  return Apply(OpKind::kConv3d, {x, weight, bias});
}
NodeId ValueGraph::MaxPool3d(NodeId x, std::size_t window) {
  OpAttrs a;
  a.window = window;
  return Apply(OpKind::kMaxPool3d, {x}, a);
}
NodeId ValueGraph::Relu(NodeId x) { return Apply(OpKind::kRelu, {x}); }
NodeId ValueGraph::LeakyRelu(NodeId x) { return Apply(OpKind::kLeakyRelu, {x}); }
NodeId ValueGraph::Selu(NodeId x) { return Apply(OpKind::kSelu, {x}); }
NodeId ValueGraph::Sigmoid(NodeId x) { return Apply(OpKind::kSigmoid, {x}); }
NodeId ValueGraph::Tanh(NodeId x) { return Apply(OpKind::kTanh, {x}); }
NodeId ValueGraph::BatchNorm(NodeId x, NodeId gamma, NodeId beta, NodeId running_mean,
                             NodeId running_var, Mode mode) {
  OpAttrs a;
  a.mode = mode;
  return Apply(OpKind::kBatchNorm, {x, gamma, beta, running_mean, running_var}, a);
}
NodeId ValueGraph::Dropout(NodeId x, double rate, Mode mode) {
  OpAttrs a;
  a.rate = rate;
  a.mode = mode;
  return Apply(OpKind::kDropout, {x}, a);
}
NodeId ValueGraph::Concat(std::span<const NodeId> parts) {
  return Apply(OpKind::kConcat, parts);
}
NodeId ValueGraph::Add(NodeId a, NodeId b) { return Apply(OpKind::kAdd, {a, b}); }
NodeId ValueGraph::Sub(NodeId a, NodeId b) { return Apply(OpKind::kSub, {a, b}); }
NodeId ValueGraph::Mul(NodeId a, NodeId b) { return Apply(OpKind::kMul, {a, b}); }
NodeId ValueGraph::Mean(std::span<const NodeId> parts) {
  return Apply(OpKind::kMean, parts);
}
NodeId ValueGraph::Sum(NodeId x) { return Apply(OpKind::kSum, {x}); }
NodeId ValueGraph::MseLoss(NodeId prediction, NodeId target) {
  return Apply(OpKind::kMseLoss, {prediction, target});
}
NodeId ValueGraph::Reshape(NodeId x, Shape shape) {
  OpAttrs a;
  a.shape = std::move(shape);
  return Apply(OpKind::kReshape, {x}, a);
}
NodeId ValueGraph::GatherRows(NodeId x, std::vector<std::size_t> rows) {
  OpAttrs a;
  a.indices = std::move(rows);
  return Apply(OpKind::kGatherRows, {x}, a);
}
NodeId ValueGraph::SegmentSum(NodeId x, std::vector<std::size_t> segment_ids,
                              std::size_t segments) {
  OpAttrs a;
  a.indices = std::move(segment_ids);
  a.segments = segments;
  return Apply(OpKind::kSegmentSum, {x}, a);
}

const DenseArray& ValueGraph::value(NodeId id) const { return nodes_.at(id).value; }
OpKind ValueGraph::kind(NodeId id) const { return nodes_.at(id).kind; }

bool ValueGraph::HasStochasticOps() const {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) {
    return n.kind == OpKind::kDropout && n.attrs.mode == Mode::kTrain && n.attrs.rate > 0;
  });
}

bool ValueGraph::HasTrainModeNorm() const {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) {
    return n.kind == OpKind::kBatchNorm && n.attrs.mode == Mode::kTrain;
  });
}

void ValueGraph::Replay() {
  for (Node& node : nodes_) {
    if (node.kind == OpKind::kInput) continue;
    Forward(node);
  }
}

void ValueGraph::Forward(Node& node) {
  const OpKind kind = node.kind;
  auto in = [&](std::size_t i) -> const DenseArray& { return nodes_[node.inputs[i]].value; };

  switch (kind) {
    case OpKind::kInput:
      return;

    case OpKind::kParameter:
      node.value = params_->at(node.param_name).value;
      return;

    case OpKind::kDense: {
      ExpectArity(kind, node.inputs.size(), 3);
      const DenseArray& x = in(0);
      const DenseArray& w = in(1);
      const DenseArray& b = in(2);
      if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.dim(1) != w.dim(0) ||
          b.dim(0) != w.dim(1)) {
        ShapeError(kind, "incompatible shapes " + Describe({&x, &w, &b}));
      }
      const std::size_t batch = x.dim(0), out = w.dim(1);
      DenseArray y({batch, out});
      MatMap ym(y.data().data(), batch, out);
      ym.noalias() = ConstMatMap(x.data().data(), batch, x.dim(1)) *
                     ConstMatMap(w.data().data(), w.dim(0), out);
      const Eigen::Map<const Eigen::RowVectorXd> bv(b.data().data(), out);
      ym.rowwise() += bv;
      node.value = std::move(y);
      return;
    }

    case OpKind::kConv3d: {
      ExpectArity(kind, node.inputs.size(), 3);
      const DenseArray& x = in(0);
      const DenseArray& w = in(1);
      const DenseArray& b = in(2);
      if (x.rank() != 5 || w.rank() != 5 || b.rank() != 1 || w.dim(1) != x.dim(1) ||
          w.dim(2) != w.dim(3) || w.dim(2) != w.dim(4) || w.dim(2) % 2 == 0 ||
          b.dim(0) != w.dim(0)) {
        ShapeError(kind, "incompatible shapes " + Describe({&x, &w, &b}));
      }
      const std::size_t batch = x.dim(0), channels = x.dim(1), filters = w.dim(0);
      const std::size_t k = w.dim(2);
      const Volume v{x.dim(2), x.dim(3), x.dim(4)};
      const std::size_t vox = v.voxels(), patch = channels * k * k * k;
      DenseArray y({batch, filters, v.d, v.h, v.w});
      std::vector<double> cols(patch * vox);
      ConstMatMap wm(w.data().data(), filters, patch);
      for (std::size_t s = 0; s < batch; ++s) {
        Im2Col(x.data().data() + s * channels * vox, channels, v, k, cols.data());
        MatMap ym(y.data().data() + s * filters * vox, filters, vox);
        ym.noalias() = wm * ConstMatMap(cols.data(), patch, vox);
        for (std::size_t f = 0; f < filters; ++f) ym.row(f).array() += b[f];
      }
      node.value = std::move(y);
      return;
    }

    case OpKind::kMaxPool3d: {
      ExpectArity(kind, node.inputs.size(), 1);
      const DenseArray& x = in(0);
      const std::size_t p = node.attrs.window;
      if (x.rank() != 5 || p == 0 || x.dim(2) < p || x.dim(3) < p || x.dim(4) < p) {
        ShapeError(kind, "window " + std::to_string(p) + " on " + Describe({&x}));
      }
      const Volume vin{x.dim(2), x.dim(3), x.dim(4)};
      const Volume vout{vin.d / p, vin.h / p, vin.w / p};
      const std::size_t planes = x.dim(0) * x.dim(1);
      DenseArray y({x.dim(0), x.dim(1), vout.d, vout.h, vout.w});
      node.argmax.assign(y.size(), 0);
      std::size_t o = 0;
      for (std::size_t pl = 0; pl < planes; ++pl) {
        const std::size_t base = pl * vin.voxels();
        for (std::size_t od = 0; od < vout.d; ++od) {
          for (std::size_t oh = 0; oh < vout.h; ++oh) {
            for (std::size_t ow = 0; ow < vout.w; ++ow, ++o) {
              std::size_t best = base + ((od * p) * vin.h + oh * p) * vin.w + ow * p;
              for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t bb = 0; bb < p; ++bb) {
                  for (std::size_t c = 0; c < p; ++c) {
                    const std::size_t idx =
                        base + ((od * p + a) * vin.h + oh * p + bb) * vin.w + ow * p + c;
                    if (x[idx] > x[best]) best = idx;
                  }
                }
              }
              y[o] = x[best];
              node.argmax[o] = best;
            }
          }
        }
      }
      node.value = std::move(y);
      return;
    }

    case OpKind::kRelu:
    case OpKind::kLeakyRelu:
    case OpKind::kSelu:
    case OpKind::kSigmoid:
    case OpKind::kTanh: {
      ExpectArity(kind, node.inputs.size(), 1);
      DenseArray y = in(0);
      for (double& v : y.data()) {
        switch (kind) {
          case OpKind::kRelu: v = v > 0 ? v : 0.0; break;
          case OpKind::kLeakyRelu: v = v > 0 ? v : kLeakyReluSlope * v; break;
          case OpKind::kSelu:
            v = v > 0 ? kSeluScale * v : kSeluScale * kSeluAlpha * std::expm1(v);
            break;
          case OpKind::kSigmoid: v = 1.0 / (1.0 + std::exp(-v)); break;
          default: v = std::tanh(v); break;
        }
      }
      node.value = std::move(y);
      return;
    }

    case OpKind::kBatchNorm: {
      ExpectArity(kind, node.inputs.size(), 5);
      const DenseArray& x = in(0);
      if (x.rank() < 2) ShapeError(kind, "input must have a channel axis " + Describe({&x}));
      const NormLayout l = LayoutOf(x);
      for (std::size_t i = 1; i < 5; ++i) {
        if (in(i).rank() != 1 || in(i).dim(0) != l.channels) {
          ShapeError(kind, "per-channel arrays must be [" + std::to_string(l.channels) +
                               "], got " + Describe({&in(i)}));
        }
      }
      const DenseArray& gamma = in(1);
      const DenseArray& beta = in(2);
      const double eps = node.attrs.epsilon;
      const std::size_t count = l.batch * l.inner;
      std::vector<double> mean(l.channels), var(l.channels);
      if (node.attrs.mode == Mode::kTrain) {
        if (count < 2) ShapeError(kind, "train mode needs at least 2 values per channel");
        for (std::size_t c = 0; c < l.channels; ++c) {
          double s = 0;
          for (std::size_t b = 0; b < l.batch; ++b) {
            const double* p = x.data().data() + (b * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) s += p[i];
          }
          mean[c] = s / count;
          double q = 0;
          for (std::size_t b = 0; b < l.batch; ++b) {
            const double* p = x.data().data() + (b * l.channels + c) * l.inner;
            for (std::size_t i = 0; i < l.inner; ++i) q += (p[i] - mean[c]) * (p[i] - mean[c]);
          }
          var[c] = q / count;
        }
        if (params_ != nullptr) {
          const auto& rm_name = nodes_[node.inputs[3]].param_name;
          const auto& rv_name = nodes_[node.inputs[4]].param_name;
          if (!rm_name.empty() && !rv_name.empty()) {
            DenseArray& rm = params_->at(rm_name).value;
            DenseArray& rv = params_->at(rv_name).value;
            const double m = node.attrs.momentum;
            for (std::size_t c = 0; c < l.channels; ++c) {
              rm[c] = (1 - m) * rm[c] + m * mean[c];
              rv[c] = (1 - m) * rv[c] + m * var[c] * count / (count - 1);
            }
          }
        }
      } else {
        for (std::size_t c = 0; c < l.channels; ++c) {
          mean[c] = in(3)[c];
          var[c] = in(4)[c];
        }
      }
      DenseArray xhat(x.shape());
      DenseArray y(x.shape());
      node.stats.assign(l.channels, 0.0);
      for (std::size_t c = 0; c < l.channels; ++c) {
        const double inv_std = 1.0 / std::sqrt(var[c] + eps);
        node.stats[c] = inv_std;
        for (std::size_t b = 0; b < l.batch; ++b) {
          const std::size_t off = (b * l.channels + c) * l.inner;
          for (std::size_t i = 0; i < l.inner; ++i) {
            xhat[off + i] = (x[off + i] - mean[c]) * inv_std;
            y[off + i] = gamma[c] * xhat[off + i] + beta[c];
          }
        }
      }
      node.aux = std::move(xhat);
      node.value = std::move(y);
      return;
    }

    case OpKind::kDropout: {
      ExpectArity(kind, node.inputs.size(), 1);
      const double rate = node.attrs.rate;
      if (!(rate >= 0.0 && rate < 1.0)) {
        ShapeError(kind, "rate must be in [0, 1), got " + std::to_string(rate));
      }
      DenseArray y = in(0);
      if (node.attrs.mode == Mode::kTrain && rate > 0) {
        const double keep = 1.0 - rate;
        DenseArray mask(y.shape());
        std::bernoulli_distribution coin(keep);
        for (std::size_t i = 0; i < y.size(); ++i) {
          mask[i] = coin(rng_) ? 1.0 / keep : 0.0;
          y[i] *= mask[i];
        }
        node.aux = std::move(mask);
      } else {
        node.aux = DenseArray();
      }
      node.value = std::move(y);
      return;
    }

    case OpKind::kConcat: {
      if (node.inputs.empty()) ShapeError(kind, "needs at least one input");
      const std::size_t batch = in(0).rank() == 2 ? in(0).dim(0) : 0;
      std::size_t width = 0;
      for (std::size_t i = 0; i < node.inputs.size(); ++i) {
        if (in(i).rank() != 2 || in(i).dim(0) != batch) {
          ShapeError(kind, "inputs must be [batch, width] with equal batch; got " +
                               Describe({&in(0), &in(i)}));
        }
        width += in(i).dim(1);
      }
      DenseArray y({batch, width});
      for (std::size_t b = 0; b < batch; ++b) {
        std::size_t col = 0;
        for (std::size_t i = 0; i < node.inputs.size(); ++i) {
          const DenseArray& part = in(i);
          const std::size_t w = part.dim(1);
          std::copy_n(part.data().data() + b * w, w, y.data().data() + b * width + col);
          col += w;
        }
      }
      node.value = std::move(y);
      return;
    }

    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      ExpectArity(kind, node.inputs.size(), 2);
      const DenseArray& a = in(0);
      const DenseArray& b = in(1);
      if (a.shape() != b.shape()) ShapeError(kind, "shape mismatch " + Describe({&a, &b}));
      DenseArray y = a;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (kind == OpKind::kAdd) y[i] += b[i];
        else if (kind == OpKind::kSub) y[i] -= b[i];
        else y[i] *= b[i];
      }
      node.value = std::move(y);
      return;
    }

    case OpKind::kMean: {
      if (node.inputs.empty()) ShapeError(kind, "needs at least one input");
      DenseArray y = in(0);
      for (std::size_t i = 1; i < node.inputs.size(); ++i) {
        if (in(i).shape() != y.shape()) {
          ShapeError(kind, "shape mismatch " + Describe({&in(0), &in(i)}));
        }
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += in(i)[j];
      }
      const double n = static_cast<double>(node.inputs.size());
      for (double& v : y.data()) v /= n;
      node.value = std::move(y);
      return;
    }

    case OpKind::kSum: {
      ExpectArity(kind, node.inputs.size(), 1);
      double s = 0;
      for (double v : in(0).data()) s += v;
      node.value = DenseArray::Scalar(s);
      return;
    }

    case OpKind::kMseLoss: {
      ExpectArity(kind, node.inputs.size(), 2);
      const DenseArray& p = in(0);
      const DenseArray& t = in(1);
      if (p.size() != t.size()) ShapeError(kind, "size mismatch " + Describe({&p, &t}));
      double s = 0;
      for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
      node.value = DenseArray::Scalar(s / static_cast<double>(p.size()));
      return;
    }

    case OpKind::kReshape: {
      ExpectArity(kind, node.inputs.size(), 1);
      if (NumElements(node.attrs.shape) != in(0).size()) {
        ShapeError(kind, "cannot reshape " + ShapeToString(in(0).shape()) + " to " +
                             ShapeToString(node.attrs.shape));
      }
      node.value = in(0).Reshaped(node.attrs.shape);
      return;
    }

    case OpKind::kGatherRows: {
      ExpectArity(kind, node.inputs.size(), 1);
      const DenseArray& x = in(0);
      const auto& rows = node.attrs.indices;
      if (x.rank() != 2 || rows.empty()) {
        ShapeError(kind, "needs rank-2 input and at least one row; got " + Describe({&x}));
      }
      const std::size_t w = x.dim(1);
      DenseArray y({rows.size(), w});
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= x.dim(0)) ShapeError(kind, "row index out of range");
        std::copy_n(x.data().data() + rows[r] * w, w, y.data().data() + r * w);
      }
      node.value = std::move(y);
      return;
    }

    case OpKind::kSegmentSum: {
      ExpectArity(kind, node.inputs.size(), 1);
      const DenseArray& x = in(0);
      const auto& seg = node.attrs.indices;
      if (x.rank() != 2 || seg.size() != x.dim(0) || node.attrs.segments == 0) {
        ShapeError(kind, "segment ids must cover every row of " + Describe({&x}));
      }
      const std::size_t w = x.dim(1);
      DenseArray y({node.attrs.segments, w});
      for (std::size_t r = 0; r < seg.size(); ++r) {
        if (seg[r] >= node.attrs.segments) ShapeError(kind, "segment id out of range");
        const double* src = x.data().data() + r * w;
        double* dst = y.data().data() + seg[r] * w;
        for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
      }
      node.value = std::move(y);
      return;
    }
  }
  throw std::invalid_argument("unknown op kind");
}

GradientMap ValueGraph::Backward(NodeId loss) {
  if (loss >= nodes_.size()) throw std::invalid_argument("backward: loss node out of range");
  if (nodes_[loss].value.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                ShapeToString(nodes_[loss].value.shape()));
  }
  requires_grad_.assign(nodes_.size(), false);
  for (std::size_t i = 0; i <= loss; ++i) {
    const Node& n = nodes_[i];
    if (n.kind == OpKind::kParameter) {
      const Parameter& p = params_->at(n.param_name);
      requires_grad_[i] = p.trainable && !p.buffer;
    } else {
      for (NodeId in : n.inputs) {
        if (requires_grad_[in]) {
          requires_grad_[i] = true;
          break;
        }
      }
    }
  }

  GradientMap out;
  if (params_ != nullptr) {
    for (const auto& [name, p] : params_->entries()) {
      if (p.trainable && !p.buffer) out.emplace(name, DenseArray(p.value.shape()));
    }
  }
  if (!requires_grad_[loss]) return out;

  std::vector<DenseArray> grads(nodes_.size());
  grads[loss] = DenseArray(nodes_[loss].value.shape(), 1.0);
  for (std::size_t i = loss + 1; i-- > 0;) {
    if (!requires_grad_[i] || grads[i].empty()) continue;
    const Node& n = nodes_[i];
    if (n.kind == OpKind::kParameter) {
      DenseArray& acc = out.at(n.param_name);
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += grads[i][j];
      continue;
    }
    BackwardNode(n, grads[i], grads);
    grads[i] = DenseArray();
  }
  return out;
}

void ValueGraph::BackwardNode(const Node& node, const DenseArray& g,
                              std::vector<DenseArray>& grads) const {
  auto in = [&](std::size_t i) -> const DenseArray& { return nodes_[node.inputs[i]].value; };
  auto wants = [&](std::size_t i) { return requires_grad_[node.inputs[i]]; };
  auto acc = [&](std::size_t i) -> DenseArray& {
    DenseArray& slot = grads[node.inputs[i]];
    if (slot.empty()) slot = DenseArray(in(i).shape());
    return slot;
  };

  switch (node.kind) {
    case OpKind::kInput:
    case OpKind::kParameter:
      return;

    case OpKind::kDense: {
      const DenseArray& x = in(0);
      const DenseArray& w = in(1);
      const std::size_t batch = x.dim(0), nin = w.dim(0), nout = w.dim(1);
      ConstMatMap gm(g.data().data(), batch, nout);
      if (wants(0)) {
        MatMap(acc(0).data().data(), batch, nin).noalias() +=
            gm * ConstMatMap(w.data().data(), nin, nout).transpose();
      }
      if (wants(1)) {
        MatMap(acc(1).data().data(), nin, nout).noalias() +=
            ConstMatMap(x.data().data(), batch, nin).transpose() * gm;
      }
      if (wants(2)) {
        Eigen::Map<Eigen::RowVectorXd>(acc(2).data().data(), nout) += gm.colwise().sum();
      }
      return;
    }

    case OpKind::kConv3d: {
      const DenseArray& x = in(0);
      const DenseArray& w = in(1);
      const std::size_t batch = x.dim(0), channels = x.dim(1), filters = w.dim(0);
      const std::size_t k = w.dim(2);
      const Volume v{x.dim(2), x.dim(3), x.dim(4)};
      const std::size_t vox = v.voxels(), patch = channels * k * k * k;
      std::vector<double> cols(patch * vox);
      RowMatrix dcols;
      ConstMatMap wm(w.data().data(), filters, patch);
      for (std::size_t s = 0; s < batch; ++s) {
        ConstMatMap gs(g.data().data() + s * filters * vox, filters, vox);
        if (wants(1)) {
          Im2Col(x.data().data() + s * channels * vox, channels, v, k, cols.data());
          MatMap(acc(1).data().data(), filters, patch).noalias() +=
              gs * ConstMatMap(cols.data(), patch, vox).transpose();
        }
        if (wants(2)) {
          DenseArray& gb = acc(2);
          for (std::size_t f = 0; f < filters; ++f) gb[f] += gs.row(f).sum();
        }
        if (wants(0)) {
          dcols.noalias() = wm.transpose() * gs;
          Col2ImAdd(dcols.data(), channels, v, k, acc(0).data().data() + s * channels * vox);
        }
      }
      return;
    }

    case OpKind::kMaxPool3d: {
      if (!wants(0)) return;
      DenseArray& gx = acc(0);
      for (std::size_t o = 0; o < g.size(); ++o) gx[node.argmax[o]] += g[o];
      return;
    }

    case OpKind::kRelu:
    case OpKind::kLeakyRelu:
    case OpKind::kSelu:
    case OpKind::kSigmoid:
    case OpKind::kTanh: {
      if (!wants(0)) return;
      const DenseArray& x = in(0);
      const DenseArray& y = node.value;
      DenseArray& gx = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double d;
        switch (node.kind) {
          case OpKind::kRelu: d = x[i] > 0 ? 1.0 : 0.0; break;
          case OpKind::kLeakyRelu: d = x[i] > 0 ? 1.0 : kLeakyReluSlope; break;
          case OpKind::kSelu:
            d = x[i] > 0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x[i]);
            break;
          case OpKind::kSigmoid: d = y[i] * (1.0 - y[i]); break;
          default: d = 1.0 - y[i] * y[i]; break;
        }
        gx[i] += g[i] * d;
      }
      return;
    }

    case OpKind::kBatchNorm: {
      const DenseArray& x = in(0);
      const DenseArray& gamma = in(1);
      const DenseArray& xhat = node.aux;
      const NormLayout l = LayoutOf(x);
      const double count = static_cast<double>(l.batch * l.inner);
      for (std::size_t c = 0; c < l.channels; ++c) {
        double sum_g = 0, sum_gx = 0;
        for (std::size_t b = 0; b < l.batch; ++b) {
          const std::size_t off = (b * l.channels + c) * l.inner;
          for (std::size_t i = 0; i < l.inner; ++i) {
            sum_g += g[off + i];
            sum_gx += g[off + i] * xhat[off + i];
          }
        }
        if (wants(1)) acc(1)[c] += sum_gx;
        if (wants(2)) acc(2)[c] += sum_g;
        if (!wants(0)) continue;
        DenseArray& gx = acc(0);
        const double inv_std = node.stats[c];
        for (std::size_t b = 0; b < l.batch; ++b) {
          const std::size_t off = (b * l.channels + c) * l.inner;
          for (std::size_t i = 0; i < l.inner; ++i) {
            if (node.attrs.mode == Mode::kTrain) {
              gx[off + i] += gamma[c] * inv_std *
                             (g[off + i] - sum_g / count - xhat[off + i] * sum_gx / count);
            } else {
              gx[off + i] += gamma[c] * inv_std * g[off + i];
            }
          }
        }
      }
      return;
    }

    case OpKind::kDropout: {
      if (!wants(0)) return;
      DenseArray& gx = acc(0);
      const bool masked = !node.aux.empty();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += masked ? g[i] * node.aux[i] : g[i];
      return;
    }

    case OpKind::kConcat: {
      const std::size_t batch = g.dim(0), width = g.dim(1);
      std::size_t col = 0;
      for (std::size_t p = 0; p < node.inputs.size(); ++p) {
        const std::size_t w = in(p).dim(1);
        if (wants(p)) {
          DenseArray& gp = acc(p);
          for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t j = 0; j < w; ++j) gp[b * w + j] += g[b * width + col + j];
          }
        }
        col += w;
      }
      return;
    }

    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      if (wants(0)) {
        DenseArray& ga = acc(0);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += node.kind == OpKind::kMul ? g[i] * in(1)[i] : g[i];
        }
      }
      if (wants(1)) {
        DenseArray& gb = acc(1);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (node.kind == OpKind::kAdd) gb[i] += g[i];
          else if (node.kind == OpKind::kSub) gb[i] -= g[i];
          else gb[i] += g[i] * in(0)[i];
        }
      }
      return;
    }

    case OpKind::kMean: {
      const double n = static_cast<double>(node.inputs.size());
      for (std::size_t p = 0; p < node.inputs.size(); ++p) {
        if (!wants(p)) continue;
        DenseArray& gp = acc(p);
        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i] / n;
      }
      return;
    }

    case OpKind::kSum: {
      if (!wants(0)) return;
      DenseArray& gx = acc(0);
      for (double& v : gx.data()) v += g[0];
      return;
    }

    case OpKind::kMseLoss: {
      const DenseArray& p = in(0);
      const DenseArray& t = in(1);
      const double scale = 2.0 * g[0] / static_cast<double>(p.size());
      if (wants(0)) {
        DenseArray& gp = acc(0);
        for (std::size_t i = 0; i < p.size(); ++i) gp[i] += scale * (p[i] - t[i]);
      }
      if (wants(1)) {
        DenseArray& gt = acc(1);
        for (std::size_t i = 0; i < p.size(); ++i) gt[i] -= scale * (p[i] - t[i]);
      }
      return;
    }

    case OpKind::kReshape: {
      if (!wants(0)) return;
      DenseArray& gx = acc(0);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      return;
    }

    case OpKind::kGatherRows: {
      if (!wants(0)) return;
      DenseArray& gx = acc(0);
      const std::size_t w = gx.dim(1);
      const auto& rows = node.attrs.indices;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t j = 0; j < w; ++j) gx[rows[r] * w + j] += g[r * w + j];
      }
      return;
    }

    case OpKind::kSegmentSum: {
      if (!wants(0)) return;
      DenseArray& gx = acc(0);
      const std::size_t w = gx.dim(1);
      const auto& seg = node.attrs.indices;
      for (std::size_t r = 0; r < seg.size(); ++r) {
        for (std::size_t j = 0; j < w; ++j) gx[r * w + j] += g[seg[r] * w + j];
      }
      return;
    }
  }
}

}  // namespace fusion::autodiff
