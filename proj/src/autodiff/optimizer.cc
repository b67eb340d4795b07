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

#include "fusion/autodiff/optimizer.h"

#include <cmath>
#include <stdexcept>

namespace fusion::autodiff {

std::string_view OptimizerKindName(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kAdamW: return "adamw";
    case OptimizerKind::kRmsProp: return "rmsprop";
    case OptimizerKind::kAdadelta: return "adadelta";
  }
  return "unknown";
}

OptimizerKind ParseOptimizerKind(std::string_view name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "adamw") return OptimizerKind::kAdamW;
  if (name == "rmsprop") return OptimizerKind::kRmsProp;
  if (name == "adadelta") return OptimizerKind::kAdadelta;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

OptimizerConfig OptimizerConfig::Defaults(OptimizerKind kind, double learning_rate) {
  OptimizerConfig c;
  c.kind = kind;
  c.learning_rate = learning_rate;
  switch (kind) {
    case OptimizerKind::kAdam:
      break;
    case OptimizerKind::kAdamW:
      c.weight_decay = 0.01;
      break;
    case OptimizerKind::kRmsProp:
      c.decay = 0.99;
      break;
    case OptimizerKind::kAdadelta:
      c.decay = 0.9;
      c.epsilon = 1e-6;
      break;
  }
  return c;
}

void OptimizerConfig::Validate() const {
  if (static_cast<unsigned>(kind) > 3) throw std::invalid_argument("unknown optimizer kind");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw std::invalid_argument("betas must lie in [0, 1)");
  }
  if (!(decay >= 0 && decay < 1)) throw std::invalid_argument("decay must lie in [0, 1)");
  if (weight_decay < 0) throw std::invalid_argument("weight_decay must be >= 0");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.Validate(); }

void Optimizer::Restore(std::int64_t step, std::map<std::string, SlotState> slots) {
  step_ = step;
  slots_ = std::move(slots);
}

void Optimizer::Step(ParameterStore& params, const GradientMap& grads) {
  for (const auto& [name, param] : params.entries()) {
    if (!param.trainable || param.buffer) continue;
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw std::invalid_argument("optimizer: missing gradient for " + name);
    }
    if (it->second.shape() != param.value.shape()) {
      throw std::invalid_argument("optimizer: gradient shape mismatch for " + name);
    }
  }

  ++step_;
  const OptimizerConfig& c = config_;
  for (const auto& [name, entry] : params.entries()) {
    if (!entry.trainable || entry.buffer) continue;
    DenseArray& w = params.at(name).value;
    const DenseArray& g = grads.at(name);
    SlotState& s = slots_[name];
    if (s.first.empty()) {
      s.first = DenseArray(w.shape());
      s.second = DenseArray(w.shape());
    }

    switch (c.kind) {
      case OptimizerKind::kAdam:
      case OptimizerKind::kAdamW: {
        const double t = static_cast<double>(step_);
        const double bc1 = 1.0 - std::pow(c.beta1, t);
        const double bc2 = 1.0 - std::pow(c.beta2, t);
        for (std::size_t i = 0; i < w.size(); ++i) {
          double gi = g[i];
          if (c.kind == OptimizerKind::kAdam && c.weight_decay > 0) gi += c.weight_decay * w[i];
          if (c.kind == OptimizerKind::kAdamW) w[i] -= c.learning_rate * c.weight_decay * w[i];
          s.first[i] = c.beta1 * s.first[i] + (1 - c.beta1) * gi;
          s.second[i] = c.beta2 * s.second[i] + (1 - c.beta2) * gi * gi;
          const double mhat = s.first[i] / bc1;
          const double vhat = s.second[i] / bc2;
          w[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
        }
        break;
      }
      case OptimizerKind::kRmsProp: {
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double gi = g[i] + c.weight_decay * w[i];
          s.second[i] = c.decay * s.second[i] + (1 - c.decay) * gi * gi;
          w[i] -= c.learning_rate * gi / (std::sqrt(s.second[i]) + c.epsilon);
        }
        break;
      }
      case OptimizerKind::kAdadelta: {
        for (std::size_t i = 0; i < w.size(); ++i) {
          const double gi = g[i] + c.weight_decay * w[i];
          s.first[i] = c.decay * s.first[i] + (1 - c.decay) * gi * gi;
          const double delta =
              std::sqrt(s.second[i] + c.epsilon) / std::sqrt(s.first[i] + c.epsilon) * gi;
          s.second[i] = c.decay * s.second[i] + (1 - c.decay) * delta * delta;
          w[i] -= c.learning_rate * delta;
        }
        break;
      }
    }
  }
}

}  // namespace fusion::autodiff
