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

#ifndef INTENTGRAPH_OPTIM_HPP_
#define INTENTGRAPH_OPTIM_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "intentgraph/tensor.hpp"

namespace intentgraph::ad {

// Glorot/Xavier uniform initialization for a (rows x cols) weight: samples
// from U(-sqrt(6 / (rows + cols)), +sqrt(6 / (rows + cols))). Rank-0 and
// rank-1 shapes are biases and come back as zeros.
Tensor xavier_init(const Tensor::Shape& shape, std::mt19937_64& rng);
Tensor xavier_init(const Tensor::Shape& shape, std::uint64_t seed);

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates, one pair per parameter tensor.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step_count = 0;
  AdamOptions options;

  static AdamState zeros_for(std::span<const Tensor> params,
                             AdamOptions options = {});
};

// One bias-corrected Adam update of every parameter in place.
void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
               AdamState& state);

// Rescales all gradients so their joint L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_by_global_norm(std::span<Tensor> grads, double max_norm);

}  // namespace intentgraph::ad

#endif  // INTENTGRAPH_OPTIM_HPP_
