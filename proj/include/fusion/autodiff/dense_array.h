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

#ifndef FUSION_AUTODIFF_DENSE_ARRAY_H_
#define FUSION_AUTODIFF_DENSE_ARRAY_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fusion::autodiff {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Row-major array of doubles. Every dimension is positive.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(Shape shape, double fill = 0.0);
  DenseArray(Shape shape, std::vector<double> data);

  static DenseArray Scalar(double value);
  static DenseArray Vector(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Value of a one-element array.
  double item() const;

  bool AllFinite() const;
  DenseArray Reshaped(Shape shape) const;
  void Fill(double value);

  // Bitwise comparison of shape and contents.
  friend bool operator==(const DenseArray& a, const DenseArray& b);

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace fusion::autodiff

#endif  // FUSION_AUTODIFF_DENSE_ARRAY_H_
