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

#include "fusion/autodiff/dense_array.h"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace fusion::autodiff {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

void CheckShape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) {
      throw std::invalid_argument("DenseArray: zero dimension in shape " +
                                  ShapeToString(shape));
    }
  }
}

}  // namespace

DenseArray::DenseArray(Shape shape, double fill) : shape_(std::move(shape)) {
  CheckShape(shape_);
  data_.assign(NumElements(shape_), fill);
}

DenseArray::DenseArray(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  CheckShape(shape_);
  if (data_.size() != NumElements(shape_)) {
    throw std::invalid_argument("DenseArray: data length " +
                                std::to_string(data_.size()) +
                                " does not match shape " + ShapeToString(shape_));
  }
}

DenseArray DenseArray::Scalar(double value) { return DenseArray({1}, {value}); }

DenseArray DenseArray::Vector(std::initializer_list<double> values) {
  return DenseArray({values.size()}, std::vector<double>(values));
}

double DenseArray::item() const {
  if (data_.size() != 1) {
    throw std::invalid_argument("DenseArray::item on array of shape " +
                                ShapeToString(shape_));
  }
  return data_[0];
}

bool DenseArray::AllFinite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

DenseArray DenseArray::Reshaped(Shape shape) const {
  if (NumElements(shape) != data_.size()) {
    throw std::invalid_argument("reshape " + ShapeToString(shape_) + " -> " +
                                ShapeToString(shape));
  }
  return DenseArray(std::move(shape), data_);
}

void DenseArray::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool operator==(const DenseArray& a, const DenseArray& b) {
  return a.shape_ == b.shape_ &&
         (a.data_.empty() ||
          std::memcmp(a.data_.data(), b.data_.data(),
                      a.data_.size() * sizeof(double)) == 0);
}

}  // namespace fusion::autodiff
