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

#include "intentgraph/optim.hpp"

#include <cmath>

#include "intentgraph/error.hpp"

namespace intentgraph::ad {

Tensor xavier_init(const Tensor::Shape& shape, std::mt19937_64& rng) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("xavier_init: zero dimension in " + shape_to_string(shape));
  }
  Tensor out(shape);
  if (shape.size() < 2) return out;
  const double bound = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : out.data()) x = dist(rng);
  return out;
}

Tensor xavier_init(const Tensor::Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return xavier_init(shape, rng);
}

AdamState AdamState::zeros_for(std::span<const Tensor> params,
                               AdamOptions options) {
  AdamState state;
  state.options = options;
  for (const Tensor& p : params) {
    state.m.push_back(Tensor::zeros_like(p));
    state.v.push_back(Tensor::zeros_like(p));
  }
  return state;
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(state.m[i])) {
      throw ShapeError("adam_step: gradient " + grads[i].shape_string() +
                       " does not match parameter " + params[i].shape_string());
    }
  }
  const AdamOptions& o = state.options;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p[j] -= o.lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
    }
  }
}

double clip_by_global_norm(std::span<Tensor> grads, double max_norm) {
  double squared = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.data()) squared += x * x;
  const double norm = std::sqrt(squared);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads) g.scale(factor);
  }
  return norm;
}

}  // namespace intentgraph::ad
