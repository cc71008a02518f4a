// Copyright 2026 The intentgraph Authors.
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

#ifndef INTENTGRAPH_TENSOR_HPP_
#define INTENTGRAPH_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace intentgraph {

// Dense row-major tensor of doubles with rank 0, 1 or 2.
//
// A rank-0 tensor holds one value. Rank-1 tensors are plain vectors and are
// used for biases and label vectors; everything on the batched forward path
// is a matrix with one row per query.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor zeros_like(const Tensor& other);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Rows/cols of the matrix view. Vectors are one row of size() columns and
  // scalars a 1x1 matrix.
  std::size_t rows() const;
  std::size_t cols() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  // Row r of a matrix as a contiguous span.
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  void fill(double value);
  // this += other, shapes must match.
  void add(const Tensor& other);
  void scale(double factor);
  double sum() const;
  bool all_finite() const;

  std::string shape_string() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const Tensor::Shape& shape);
std::string shape_to_string(const Tensor::Shape& shape);

}  // namespace intentgraph

#endif  // INTENTGRAPH_TENSOR_HPP_
