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
#include <vector>

#include <gtest/gtest.h>

#include "intentgraph/error.hpp"

namespace intentgraph {
namespace {

TEST(Xavier, UniformWithinGlorotBound) {
  const Tensor w = ad::xavier_init({40, 60}, 3);
  const double bound = std::sqrt(6.0 / 100.0);
  double sum = 0.0, sq = 0.0;
  for (double x : w.values()) {
    EXPECT_LE(std::abs(x), bound);
    sum += x;
    sq += x * x;
  }
  const double n = static_cast<double>(w.size());
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  // Variance of U(-b, b) is b^2 / 3 = 2 / (fan_in + fan_out).
  EXPECT_NEAR(sq / n, 2.0 / 100.0, 0.002);
}

TEST(Xavier, VectorsAreZeroAndSeedsReproduce) {
  const Tensor b = ad::xavier_init({7}, 1);
  for (double x : b.values()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(ad::xavier_init({3, 4}, 9), ad::xavier_init({3, 4}, 9));
  EXPECT_NE(ad::xavier_init({3, 4}, 9), ad::xavier_init({3, 4}, 10));
  EXPECT_THROW(ad::xavier_init({0, 4}, 1), ShapeError);
}

TEST(Adam, MatchesReferenceTrajectory) {
  // Reference values from a standard Adam implementation in float64,
  // lr 0.1, betas (0.9, 0.999), eps 1e-8.
  std::vector<Tensor> params = {Tensor::vector({1.0, -2.0})};
  ad::AdamOptions options;
  options.lr = 0.1;
  ad::AdamState state = ad::AdamState::zeros_for(params, options);
  const std::vector<std::vector<double>> grads = {{0.5, -1.0}, {0.1, 0.3}, {-0.2, 0.0}};
  const std::vector<std::vector<double>> expected = {
      {0.900000002, -1.900000001},
      {0.8196959063846518, -1.8572151424292265},
      {0.785260531835489, -1.8241423228510014}};
  for (std::size_t s = 0; s < grads.size(); ++s) {
    const std::vector<Tensor> g = {Tensor::vector(grads[s])};
    ad::adam_step(params, g, state);
    EXPECT_NEAR(params[0][0], expected[s][0], 1e-12);
    EXPECT_NEAR(params[0][1], expected[s][1], 1e-12);
  }
  EXPECT_EQ(state.step_count, 3u);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<Tensor> params = {Tensor::vector({3.0, -4.0})};
  ad::AdamOptions options;
  options.lr = 0.05;
  ad::AdamState state = ad::AdamState::zeros_for(params, options);
  for (int i = 0; i < 2000; ++i) {
    std::vector<Tensor> g = {Tensor::vector({2.0 * params[0][0], 2.0 * params[0][1]})};
    ad::adam_step(params, g, state);
  }
  EXPECT_NEAR(params[0][0], 0.0, 1e-3);
  EXPECT_NEAR(params[0][1], 0.0, 1e-3);
}

TEST(Adam, RejectsMismatchedShapes) {
  std::vector<Tensor> params = {Tensor::vector({1.0, 2.0})};
  ad::AdamState state = ad::AdamState::zeros_for(params);
  std::vector<Tensor> g = {Tensor::vector({1.0})};
  EXPECT_THROW(ad::adam_step(params, g, state), ShapeError);
}

TEST(Clipping, RescalesOnlyAboveThreshold) {
  std::vector<Tensor> g = {Tensor::vector({3.0}), Tensor::vector({4.0})};
  EXPECT_DOUBLE_EQ(ad::clip_by_global_norm(g, 5.0), 5.0);
  EXPECT_DOUBLE_EQ(g[0][0], 3.0);
  EXPECT_DOUBLE_EQ(ad::clip_by_global_norm(g, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(g[0][0], 0.6);
  EXPECT_DOUBLE_EQ(g[1][0], 0.8);
  std::vector<Tensor> zero = {Tensor::vector({0.0})};
  EXPECT_EQ(ad::clip_by_global_norm(zero, 1.0), 0.0);
  EXPECT_EQ(zero[0][0], 0.0);
}

}  // namespace
}  // namespace intentgraph
