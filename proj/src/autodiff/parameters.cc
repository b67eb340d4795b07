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

#include "fusion/autodiff/parameters.h"

#include <cstring>
#include <stdexcept>

namespace fusion::autodiff {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void FnvMix(std::uint64_t& h, const void* bytes, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

bool HasPrefix(std::string_view name, std::string_view prefix) {
  return name.substr(0, prefix.size()) == prefix;
}

}  // namespace

DenseArray& ParameterStore::Add(const std::string& name, DenseArray init,
                                bool trainable) {
  auto [it, inserted] =
      entries_.try_emplace(name, Parameter{std::move(init), trainable, false});
  if (!inserted) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  return it->second.value;
}

DenseArray& ParameterStore::AddBuffer(const std::string& name, DenseArray init) {
  auto [it, inserted] =
      entries_.try_emplace(name, Parameter{std::move(init), false, true});
  if (!inserted) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  return it->second.value;
}

bool ParameterStore::Contains(std::string_view name) const {
  return entries_.find(name) != entries_.end();
}

Parameter& ParameterStore::at(std::string_view name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::out_of_range("unknown parameter: " + std::string(name));
  }
  return it->second;
}

const Parameter& ParameterStore::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::out_of_range("unknown parameter: " + std::string(name));
  }
  return it->second;
}

std::size_t ParameterStore::SetTrainable(std::string_view prefix, bool trainable) {
  std::size_t touched = 0;
  for (auto& [name, param] : entries_) {
    if (HasPrefix(name, prefix) && !param.buffer) {
      param.trainable = trainable;
      ++touched;
    }
  }
  return touched;
}

std::vector<std::string> ParameterStore::TrainableNames() const {
  std::vector<std::string> names;
  for (const auto& [name, param] : entries_) {
    if (param.trainable) names.push_back(name);
  }
  return names;
}

std::size_t ParameterStore::TrainableCount() const {
  std::size_t n = 0;
  for (const auto& [name, param] : entries_) {
    if (param.trainable) n += param.value.size();
  }
  return n;
}

std::uint64_t ParameterStore::Fingerprint(std::string_view prefix) const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [name, param] : entries_) {
    if (!HasPrefix(name, prefix)) continue;
    FnvMix(h, name.data(), name.size());
    for (std::size_t d : param.value.shape()) FnvMix(h, &d, sizeof d);
    const auto data = param.value.data();
    FnvMix(h, data.data(), data.size_bytes());
  }
  return h;
}

double ParameterStore::SquaredDistance(const ParameterStore& a, const ParameterStore& b,
                                       std::string_view prefix) {
  double total = 0.0;
  for (const auto& [name, param] : a.entries_) {
    if (!HasPrefix(name, prefix)) continue;
    const auto& other = b.at(name).value;
    if (other.shape() != param.value.shape()) {
      throw std::invalid_argument("shape mismatch comparing parameter " + name);
    }
    for (std::size_t i = 0; i < other.size(); ++i) {
      const double d = param.value[i] - other[i];
      total += d * d;
    }
  }
  return total;
}

}  // namespace fusion::autodiff
