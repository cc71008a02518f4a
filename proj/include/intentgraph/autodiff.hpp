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

#ifndef INTENTGRAPH_AUTODIFF_HPP_
#define INTENTGRAPH_AUTODIFF_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "intentgraph/tensor.hpp"

// Reverse-mode differentiation over a dynamically recorded tape.
//
// A Tape is built per forward pass: every op appends a node holding its
// value and a closure that pushes the node's adjoint into its parents.
// Because nodes are appended in evaluation order, reverse insertion order is
// a valid reverse topological order and backward() visits each node once.
//
// Trainable tensors enter the tape through parameter(), which borrows the
// value and routes the adjoint straight into a caller-owned gradient buffer.
// Several tapes may therefore run on different threads as long as each has
// its own gradient buffers.
namespace intentgraph::ad {

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Tensor& grad() const;

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, Var self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Value that never receives a gradient.
  Var constant(Tensor value);
  // Like constant() but borrows; `value` must outlive the tape.
  Var constant_ref(const Tensor& value);
  // Differentiable input whose gradient lives on the tape and accumulates
  // across backward() calls.
  Var leaf(Tensor value);
  // Borrowed trainable tensor; adjoints accumulate into `grad_sink`, which
  // must have the same shape and outlive the tape.
  Var parameter(const Tensor& value, Tensor& grad_sink);

  // Appends an op result. `backward` runs only if some parent needs a
  // gradient. Throws NumericError if `value` holds NaN or Inf.
  Var record(std::string_view op, Tensor value, std::span<const Var> parents,
             BackwardFn backward);

  const Tensor& value(Var v) const;
  // Adjoint buffer of `v`, allocated as zeros on first access.
  Tensor& grad(Var v);
  const Tensor& grad(Var v) const;
  bool requires_grad(Var v) const;

  // Propagates d(root)/d(node) to every node reachable from `root`. Op
  // adjoints are reset first; leaf and parameter gradients accumulate.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* borrowed_value = nullptr;
    Tensor grad;
    Tensor* grad_sink = nullptr;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_op = false;
  };

  Var push(Node node);
  Node& node(Var v);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

// ---- Linear algebra ------------------------------------------------------

// a (m x k) times b (k x n) or b (k). Result is (m x n) or (m).
Var matmul(Var a, Var b);
// a (m x k) or (k) times transpose of b (n x k). Result (m x n) or (n).
Var matmul_nt(Var a, Var b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
// Elementwise product.
Var mul(Var a, Var b);
// a (m x n) plus bias (n) broadcast over rows.
Var add_row_bias(Var a, Var bias);
// Row r of a (m x n) multiplied by s[r]; s is (m), (m x 1) or a scalar when m == 1.
Var scale_rows(Var a, Var s);
Var scale(Var a, double factor);
// alpha * a + beta, elementwise.
Var affine(Var a, double alpha, double beta);

// Concatenation along the last axis. Matrices must share their row count.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// `length` entries of the last axis starting at `begin`.
Var slice(Var a, std::size_t begin, std::size_t length);
Var sum(Var a);

// Row b of the result is column ids[b] of `table` (D x V): table * one_hot.
Var gather_columns(Var table, std::span<const std::size_t> ids);

// ---- Nonlinearities ------------------------------------------------------

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
// Softmax over the last axis.
Var softmax(Var a);
Var log(Var a);
// log(1 + exp(a)), numerically stable.
Var softplus(Var a);

// Row-normalizes nonnegative scores over entries where mask == 1. A row whose
// masked entries sum to zero becomes uniform over the mask (no gradient).
// Masked-out entries are 0 in the output.
Var normalize_rows(Var scores, const Tensor& mask);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

// ---- Finite differences --------------------------------------------------

// Central difference d f / d x[i] for every entry of x. `f` must not keep
// references to x across calls.
Tensor numeric_gradient(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double step = 1e-5);

// |a - b| / max(|a|, |b|, floor) maximized over entries.
double max_relative_error(const Tensor& analytic, const Tensor& numeric,
                          double floor = 1e-6);

}  // namespace intentgraph::ad

#endif  // INTENTGRAPH_AUTODIFF_HPP_
