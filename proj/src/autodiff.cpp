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

#include "intentgraph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "intentgraph/error.hpp"

namespace intentgraph::ad {

const Tensor& Var::value() const { return tape_->value(*this); }
const Tensor& Var::grad() const { return tape_->grad(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tape::Node& Tape::node(Var v) { return nodes_.at(v.id()); }
const Tape::Node& Tape::node(Var v) const { return nodes_.at(v.id()); }

namespace {

void require_finite(std::string_view what, const Tensor& t) {
  if (!t.all_finite()) {
    throw NumericError("non-finite value in " + std::string(what));
  }
}

}  // namespace

Var Tape::constant(Tensor value) {
  require_finite("constant", value);
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_ref(const Tensor& value) {
  require_finite("constant", value);
  Node n;
  n.borrowed_value = &value;
  return push(std::move(n));
}

Var Tape::leaf(Tensor value) {
  require_finite("leaf", value);
  Node n;
  n.grad = Tensor::zeros_like(value);
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::parameter(const Tensor& value, Tensor& grad_sink) {
  if (!value.same_shape(grad_sink)) {
    throw ShapeError("gradient buffer " + grad_sink.shape_string() +
                     " does not match parameter " + value.shape_string());
  }
  require_finite("parameter", value);
  Node n;
  n.borrowed_value = &value;
  n.grad_sink = &grad_sink;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::record(std::string_view op, Tensor value,
                 std::span<const Var> parents, BackwardFn backward) {
  require_finite(op, value);
  Node n;
  n.value = std::move(value);
  n.is_op = true;
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [this](Var p) { return requires_grad(p); });
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.borrowed_value ? *n.borrowed_value : n.value;
}

Tensor& Tape::grad(Var v) {
  Node& n = node(v);
  if (n.grad_sink) return *n.grad_sink;
  if (n.grad.empty() && !value(v).empty()) n.grad = Tensor::zeros_like(value(v));
  return n.grad;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.grad_sink ? *n.grad_sink : n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    throw ShapeError("backward() needs a scalar root, got " +
                     value(root).shape_string());
  }
  for (Node& n : nodes_) {
    if (n.is_op) n.grad = Tensor();
  }
  if (!requires_grad(root)) return;
  grad(root)[0] += 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, Var(this, static_cast<std::uint32_t>(i)));
  }
}

// ---- Linear algebra ------------------------------------------------------

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ShapeError(message);
}

std::string shapes(std::string_view op, const Tensor& a, const Tensor& b) {
  return std::string(op) + ": incompatible shapes " + a.shape_string() +
         " and " + b.shape_string();
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.rank() == 2 && (B.rank() == 1 || B.rank() == 2) &&
              A.shape()[1] == B.shape()[0],
          shapes("matmul", A, B));
  const std::size_t m = A.shape()[0], k = A.shape()[1];
  const std::size_t n = B.rank() == 2 ? B.shape()[1] : 1;
  Tensor out(B.rank() == 2 ? Tensor::Shape{m, n} : Tensor::Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  const Var parents[] = {a, b};
  return a.tape().record(
      "matmul", std::move(out), parents,
      [a, b, m, k, n](Tape& t, Var self) {
        const Tensor& G = t.grad(self);
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        if (t.requires_grad(a)) {
          Tensor& dA = t.grad(a);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
              dA[i * k + p] += acc;
            }
        }
        if (t.requires_grad(b)) {
          Tensor& dB = t.grad(b);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = A[i * k + p];
              for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * G[i * n + j];
            }
        }
      });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require((A.rank() == 1 || A.rank() == 2) && B.rank() == 2 &&
              A.cols() == B.shape()[1],
          shapes("matmul_nt", A, B));
  const std::size_t m = A.rows(), k = A.cols(), n = B.shape()[0];
  Tensor out(A.rank() == 2 ? Tensor::Shape{m, n} : Tensor::Shape{n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = &A[i * k];
    for (std::size_t j = 0; j < n; ++j) {
      const double* w = &B[j * k];
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += x[p] * w[p];
      out[i * n + j] = acc;
    }
  }
  const Var parents[] = {a, b};
  return a.tape().record(
      "matmul_nt", std::move(out), parents,
      [a, b, m, k, n](Tape& t, Var self) {
        const Tensor& G = t.grad(self);
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        const bool need_a = t.requires_grad(a), need_b = t.requires_grad(b);
        Tensor* dA = need_a ? &t.grad(a) : nullptr;
        Tensor* dB = need_b ? &t.grad(b) : nullptr;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const double g = G[i * n + j];
            if (g == 0.0) continue;
            if (need_a) {
              double* da = &(*dA)[i * k];
              const double* w = &B[j * k];
              for (std::size_t p = 0; p < k; ++p) da[p] += g * w[p];
            }
            if (need_b) {
              double* dw = &(*dB)[j * k];
              const double* x = &A[i * k];
              for (std::size_t p = 0; p < k; ++p) dw[p] += g * x[p];
            }
          }
        }
      });
}

namespace {

template <typename Forward, typename DA, typename DB>
Var binary_elementwise(std::string_view op, Var a, Var b, Forward f, DA da,
                       DB db) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.same_shape(B), shapes(op, A, B));
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(A[i], B[i]);
  const Var parents[] = {a, b};
  return a.tape().record(op, std::move(out), parents,
                         [a, b, da, db](Tape& t, Var self) {
                           const Tensor& G = t.grad(self);
                           const Tensor& A = t.value(a);
                           const Tensor& B = t.value(b);
                           if (t.requires_grad(a)) {
                             Tensor& gA = t.grad(a);
                             for (std::size_t i = 0; i < G.size(); ++i)
                               gA[i] += G[i] * da(A[i], B[i]);
                           }
                           if (t.requires_grad(b)) {
                             Tensor& gB = t.grad(b);
                             for (std::size_t i = 0; i < G.size(); ++i)
                               gB[i] += G[i] * db(A[i], B[i]);
                           }
                         });
}

// Unary op whose derivative is expressed through input x and output y.
template <typename Forward, typename Derivative>
Var unary_elementwise(std::string_view op, Var a, Forward f, Derivative d) {
  const Tensor& A = a.value();
  require_finite(op, A);
  Tensor out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(A[i]);
  const Var parents[] = {a};
  return a.tape().record(op, std::move(out), parents,
                         [a, d](Tape& t, Var self) {
                           const Tensor& G = t.grad(self);
                           const Tensor& X = t.value(a);
                           const Tensor& Y = t.value(self);
                           Tensor& gA = t.grad(a);
                           for (std::size_t i = 0; i < G.size(); ++i)
                             gA[i] += G[i] * d(X[i], Y[i]);
                         });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary_elementwise(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary_elementwise(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var add_row_bias(Var a, Var bias) {
  const Tensor& A = a.value();
  const Tensor& b = bias.value();
  require(A.rank() >= 1 && b.rank() == 1 && A.cols() == b.size(),
          shapes("add_row_bias", A, b));
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  const Var parents[] = {a, bias};
  return a.tape().record("add_row_bias", std::move(out), parents,
                         [a, bias, m, n](Tape& t, Var self) {
                           const Tensor& G = t.grad(self);
                           if (t.requires_grad(a)) t.grad(a).add(G);
                           if (t.requires_grad(bias)) {
                             Tensor& gb = t.grad(bias);
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                 gb[j] += G[i * n + j];
                           }
                         });
}

Var scale_rows(Var a, Var s) {
  const Tensor& A = a.value();
  const Tensor& S = s.value();
  require(A.rows() == S.size(), shapes("scale_rows", A, S));
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = A[i * n + j] * S[i];
  const Var parents[] = {a, s};
  return a.tape().record("scale_rows", std::move(out), parents,
                         [a, s, m, n](Tape& t, Var self) {
                           const Tensor& G = t.grad(self);
                           const Tensor& A = t.value(a);
                           const Tensor& S = t.value(s);
                           if (t.requires_grad(a)) {
                             Tensor& gA = t.grad(a);
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                 gA[i * n + j] += G[i * n + j] * S[i];
                           }
                           if (t.requires_grad(s)) {
                             Tensor& gS = t.grad(s);
                             for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                 gS[i] += G[i * n + j] * A[i * n + j];
                           }
                         });
}

Var scale(Var a, double factor) { return affine(a, factor, 0.0); }

Var affine(Var a, double alpha, double beta) {
  return unary_elementwise(
      "affine", a, [alpha, beta](double x) { return alpha * x + beta; },
      [alpha](double, double) { return alpha; });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat(std::span<const Var> parts) {
  require(!parts.empty(), "concat: no operands");
  const Tensor& first = parts.front().value();
  const std::size_t rank = first.rank(), m = first.rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    require(v.rank() == rank && v.rows() == m && rank >= 1,
            shapes("concat", first, v));
    offsets.push_back(total);
    total += v.cols();
  }
  Tensor out(rank == 2 ? Tensor::Shape{m, total} : Tensor::Shape{total});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < m; ++i)
      std::copy(v.row(i).begin(), v.row(i).end(),
                out.row(i).begin() + static_cast<std::ptrdiff_t>(offsets[k]));
  }
  std::vector<Var> owned(parts.begin(), parts.end());
  return parts.front().tape().record(
                   "concat", std::move(out), parts,
                   [owned, offsets, m](Tape& t, Var self) {
                     const Tensor& G = t.grad(self);
                     for (std::size_t k = 0; k < owned.size(); ++k) {
                       if (!t.requires_grad(owned[k])) continue;
                       Tensor& gp = t.grad(owned[k]);
                       const std::size_t w = gp.cols();
                       for (std::size_t i = 0; i < m; ++i) {
                         auto src = G.row(i).subspan(offsets[k], w);
                         auto dst = gp.row(i);
                         for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                       }
                     }
                   });
}

Var slice(Var a, std::size_t begin, std::size_t length) {
  const Tensor& A = a.value();
  require(A.rank() >= 1 && begin + length <= A.cols() && length > 0,
          "slice: range [" + std::to_string(begin) + ", " +
              std::to_string(begin + length) + ") outside " + A.shape_string());
  const std::size_t m = A.rows();
  Tensor out(A.rank() == 2 ? Tensor::Shape{m, length} : Tensor::Shape{length});
  for (std::size_t i = 0; i < m; ++i) {
    auto src = A.row(i).subspan(begin, length);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  const Var parents[] = {a};
  return a.tape().record("slice", std::move(out), parents,
                         [a, begin, length, m](Tape& t, Var self) {
                           const Tensor& G = t.grad(self);
                           Tensor& gA = t.grad(a);
                           for (std::size_t i = 0; i < m; ++i) {
                             auto dst = gA.row(i).subspan(begin, length);
                             auto src = G.row(i);
                             for (std::size_t j = 0; j < length; ++j) dst[j] += src[j];
                           }
                         });
}

Var sum(Var a) {
  const Var parents[] = {a};
  return a.tape().record("sum", Tensor::scalar(a.value().sum()), parents,
                         [a](Tape& t, Var self) {
                           const double g = t.grad(self)[0];
                           Tensor& gA = t.grad(a);
                           for (std::size_t i = 0; i < gA.size(); ++i) gA[i] += g;
                         });
}

Var gather_columns(Var table, std::span<const std::size_t> ids) {
  const Tensor& T = table.value();
  require(T.rank() == 2, "gather_columns: table must be a matrix, got " +
                             T.shape_string());
  const std::size_t d = T.shape()[0], v = T.shape()[1];
  std::vector<std::size_t> cols(ids.begin(), ids.end());
  Tensor out({cols.size(), d});
  for (std::size_t b = 0; b < cols.size(); ++b) {
    if (cols[b] >= v) {
      throw LookupError("embedding id " + std::to_string(cols[b]) +
                        " outside vocabulary of size " + std::to_string(v));
    }
    for (std::size_t r = 0; r < d; ++r) out[b * d + r] = T[r * v + cols[b]];
  }
  const Var parents[] = {table};
  return table.tape().record("gather_columns", std::move(out), parents,
                             [table, cols, d, v](Tape& t, Var self) {
                               const Tensor& G = t.grad(self);
                               Tensor& gT = t.grad(table);
                               for (std::size_t b = 0; b < cols.size(); ++b)
                                 for (std::size_t r = 0; r < d; ++r)
                                   gT[r * v + cols[b]] += G[b * d + r];
                             });
}

// ---- Nonlinearities ------------------------------------------------------

Var sigmoid(Var a) {
  return unary_elementwise("sigmoid", a, stable_sigmoid,
                           [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary_elementwise(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary_elementwise(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var log(Var a) {
  return unary_elementwise(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var softplus(Var a) {
  return unary_elementwise(
      "softplus", a,
      [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [](double x, double) { return stable_sigmoid(x); });
}

Var softmax(Var a) {
  const Tensor& A = a.value();
  require_finite("softmax", A);
  require(A.rank() >= 1, "softmax: needs a vector or matrix");
  const std::size_t m = A.rows(), n = A.cols();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < m; ++i) {
    auto x = A.row(i);
    auto y = out.row(i);
    const double mx = *std::max_element(x.begin(), x.end());
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  const Var parents[] = {a};
  return a.tape().record("softmax", std::move(out), parents,
                         [a, m, n](Tape& t, Var self) {
                           const Tensor& G = t.grad(self);
                           const Tensor& Y = t.value(self);
                           Tensor& gA = t.grad(a);
                           for (std::size_t i = 0; i < m; ++i) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < n; ++j)
                               dot += G[i * n + j] * Y[i * n + j];
                             for (std::size_t j = 0; j < n; ++j)
                               gA[i * n + j] += Y[i * n + j] * (G[i * n + j] - dot);
                           }
                         });
}

Var normalize_rows(Var scores, const Tensor& mask) {
  const Tensor& X = scores.value();
  require(X.same_shape(mask), shapes("normalize_rows", X, mask));
  const std::size_t m = X.rows(), n = X.cols();
  Tensor out(X.shape());
  std::vector<double> totals(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double total = 0.0, count = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[i * n + j] == 0.0) continue;
      total += X[i * n + j];
      count += 1.0;
    }
    if (count == 0.0) throw ShapeError("normalize_rows: row with empty mask");
    totals[i] = total;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[i * n + j] == 0.0) continue;
      out[i * n + j] = total > 0.0 ? X[i * n + j] / total : 1.0 / count;
    }
  }
  const Var parents[] = {scores};
  return scores.tape().record(
      "normalize_rows", std::move(out), parents,
      [scores, mask, totals, m, n](Tape& t, Var self) {
        const Tensor& G = t.grad(self);
        const Tensor& Y = t.value(self);
        Tensor& gX = t.grad(scores);
        for (std::size_t i = 0; i < m; ++i) {
          if (!(totals[i] > 0.0)) continue;
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += G[i * n + j] * Y[i * n + j];
          for (std::size_t j = 0; j < n; ++j) {
            if (mask[i * n + j] == 0.0) continue;
            gX[i * n + j] += (G[i * n + j] - dot) / totals[i];
          }
        }
      });
}

// ---- Finite differences --------------------------------------------------

Tensor numeric_gradient(const std::function<double(const Tensor&)>& f,
                        const Tensor& x, double step) {
  Tensor probe = x;
  Tensor out = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + step;
    const double up = f(probe);
    probe[i] = original - step;
    const double down = f(probe);
    probe[i] = original;
    out[i] = (up - down) / (2.0 * step);
  }
  return out;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric,
                          double floor) {
  require(analytic.same_shape(numeric),
          shapes("max_relative_error", analytic, numeric));
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace intentgraph::ad
