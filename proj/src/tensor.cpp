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

#include "intentgraph/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "intentgraph/error.hpp"

namespace intentgraph {

std::size_t shape_size(const Tensor::Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Tensor::Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  if (shape_.size() > 2) {
    throw ShapeError("tensor rank above 2 is not supported");
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.size() > 2) {
    throw ShapeError("tensor rank above 2 is not supported");
  }
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

std::size_t Tensor::rows() const { return shape_.size() == 2 ? shape_[0] : 1; }

std::size_t Tensor::cols() const {
  if (shape_.size() == 2) return shape_[1];
  return shape_.empty() ? 1 : shape_[0];
}

std::span<double> Tensor::row(std::size_t r) {
  return std::span<double>(data_).subspan(r * cols(), cols());
}

std::span<const double> Tensor::row(std::size_t r) const {
  return std::span<const double>(data_).subspan(r * cols(), cols());
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::add(const Tensor& other) {
  if (!same_shape(other)) {
    throw ShapeError("cannot add " + other.shape_string() + " into " +
                     shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Tensor::scale(double factor) {
  for (double& v : data_) v *= factor;
}

double Tensor::sum() const {
  return std::accumulate(data_.begin(), data_.end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const { return shape_to_string(shape_); }

}  // namespace intentgraph
