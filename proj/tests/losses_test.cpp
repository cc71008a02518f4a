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

#include "intentgraph/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "intentgraph/error.hpp"
#include "test_util.hpp"

namespace intentgraph {
namespace {

using testing::central_difference;
using testing::random_tensor;
using testing::worst_error;

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo = 0.01,
                            double hi = 0.99) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<std::uint8_t> bits(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = rng() % 2;
  return v;
}

std::size_t ones(const std::vector<std::uint8_t>& v) {
  return static_cast<std::size_t>(std::count(v.begin(), v.end(), 1));
}

double ce_oracle(const std::vector<std::uint8_t>& t, const std::vector<double>& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) h -= t[i] ? std::log(p[i]) : std::log1p(-p[i]);
  return h;
}

double count_oracle(const std::vector<double>& x, const std::vector<double>& y, std::size_t c) {
  const std::size_t l = x.size();
  if (c == 0 || c == l) return 0.0;
  std::size_t v = 0;
  for (std::size_t p = 0; p < l; ++p)
    for (std::size_t q = 0; q < l; ++q) v += (y[p] < y[q] && x[p] >= x[q]) ? 1 : 0;
  return static_cast<double>(v) / static_cast<double>(c * (l - c));
}

double surrogate_oracle(const std::vector<double>& x, const std::vector<double>& y, std::size_t c,
                        double tau) {
  const std::size_t l = x.size();
  if (c == 0 || c == l) return 0.0;
  double s = 0.0;
  for (std::size_t p = 0; p < l; ++p)
    for (std::size_t q = 0; q < l; ++q)
      if (p != q && x[p] >= x[q]) s += std::log1p(std::exp(tau * (y[q] - y[p]))) / tau;
  return s / static_cast<double>(c * (l - c));
}

TransferMatrix random_matrix(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  TransferMatrix a(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t s = rng() % m;
    std::size_t t = rng() % m;
    if (m > 1 && t == s) t = (s + 1) % m;
    a.set(s, j, 1);
    a.set(t, j, 1);
  }
  return a;
}

TransferMatrix single_edge() {
  TransferMatrix a(2, 1);
  a.set(0, 0, 1);
  a.set(1, 0, 1);
  return a;
}

TEST(CrossEntropy, ClosedForms) {
  EXPECT_NEAR(cross_entropy(std::vector<std::uint8_t>{1, 0},
                            std::vector<double>{1.0 - kProbEpsilon, kProbEpsilon}),
              0.0, 1e-10);
  EXPECT_NEAR(cross_entropy(std::vector<std::uint8_t>{1}, std::vector<double>{0.5}),
              std::log(2.0), 1e-15);
  EXPECT_THROW(cross_entropy(std::vector<std::uint8_t>{1}, std::vector<double>{0.5, 0.5}),
               ShapeError);
}

TEST(CrossEntropy, ClampsSaturatedProbabilities) {
  const double h = cross_entropy(std::vector<std::uint8_t>{1}, std::vector<double>{0.0});
  EXPECT_TRUE(std::isfinite(h));
  EXPECT_NEAR(h, -std::log(kProbEpsilon), 1e-9);
}

TEST(CrossEntropy, MatchesResummationOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::size_t l = 1 + rng() % 20;
    const auto t = bits(rng, l);
    const auto p = uniform(rng, l);
    const double h = cross_entropy(t, p);
    EXPECT_NEAR(h, ce_oracle(t, p), 1e-12);
    EXPECT_GT(h, 0.0);
  }
}

TEST(CrossEntropy, TapeGradientMatchesFiniteDifferences) {
  const Tensor truth = Tensor::matrix(2, 3, {1, 0, 1, 0, 0, 1});
  const Tensor p = random_tensor({2, 3}, 4, 0.05, 0.95);
  const double err = testing::op_gradient_error(
      [&](ad::Tape&, ad::Var x) { return cross_entropy(x, truth); }, p);
  EXPECT_LT(err, 1e-7);
}

TEST(RankingCount, WorkedExamples) {
  const std::vector<double> x = {0.9, 0.1};
  EXPECT_EQ(ranking_loss_count(x, std::vector<double>{0.8, 0.2}, 1), 0.0);
  EXPECT_EQ(ranking_loss_count(x, std::vector<double>{0.2, 0.8}, 1), 1.0);
}

TEST(RankingCount, DegenerateCardinalitiesGiveZero) {
  const std::vector<double> x = {0.9, 0.1, 0.5};
  const std::vector<double> y = {0.1, 0.9, 0.3};
  EXPECT_EQ(ranking_loss_count(x, y, 0), 0.0);
  EXPECT_EQ(ranking_loss_count(x, y, 3), 0.0);
  EXPECT_THROW(ranking_loss_count(x, y, 4), ShapeError);
  EXPECT_THROW(ranking_loss_count(x, std::vector<double>{0.1}, 1), ShapeError);
}

TEST(RankingCount, MatchesPairEnumerationExactly) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t l = 1 + rng() % 8;
    std::vector<double> x(l), y(l);
    const int levels = 1 + static_cast<int>(rng() % 5);
    for (std::size_t k = 0; k < l; ++k) {
      x[k] = static_cast<double>(rng() % levels);
      y[k] = static_cast<double>(rng() % levels);
    }
    const std::size_t c = rng() % (l + 1);
    EXPECT_EQ(ranking_loss_count(x, y, c), count_oracle(x, y, c));
  }
}

TEST(RankingCount, InvariantUnderMonotoneMapsAndJointPermutation) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::size_t l = 2 + rng() % 10;
    const auto x = uniform(rng, l);
    const auto y = uniform(rng, l);
    const std::size_t c = 1 + rng() % (l - 1);
    const double base = ranking_loss_count(x, y, c);
    EXPECT_GE(base, 0.0);
    std::vector<double> mapped(l);
    std::transform(y.begin(), y.end(), mapped.begin(), [](double v) { return std::exp(5 * v); });
    EXPECT_EQ(ranking_loss_count(x, mapped, c), base);
    std::vector<std::size_t> perm(l);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> px(l), py(l);
    for (std::size_t k = 0; k < l; ++k) {
      px[k] = x[perm[k]];
      py[k] = y[perm[k]];
    }
    EXPECT_EQ(ranking_loss_count(px, py, c), base);
    EXPECT_EQ(ranking_loss_count(x, x, c), 0.0);
  }
}

TEST(RankingSurrogate, MatchesOracleAndBoundsCount) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const std::size_t l = 1 + rng() % 10;
    const auto x = uniform(rng, l);
    const auto y = uniform(rng, l);
    const std::size_t c = rng() % (l + 1);
    const double s = ranking_loss_surrogate(x, y, c);
    EXPECT_NEAR(s, surrogate_oracle(x, y, c, 10.0), 1e-12);
    EXPECT_GE(s, std::log(2.0) / 10.0 * ranking_loss_count(x, y, c));
  }
}

TEST(RankingSurrogate, SmallForWideConsistentMargins) {
  const std::vector<double> x = {3.0, 2.0, 1.0, 0.0};
  EXPECT_LT(ranking_loss_surrogate(x, x, 2), 0.01);
  EXPECT_THROW(ranking_loss_surrogate(x, x, 2, 0.0), Error);
}

TEST(RankingSurrogate, GradientMatchesFiniteDifferencesWithDetachedAnchor) {
  const Tensor anchor = random_tensor({3, 5}, 11, 0.0, 1.0);
  const Tensor y = random_tensor({3, 5}, 12, 0.0, 1.0);
  const std::vector<std::size_t> cards = {1, 2, 4};
  const double err = testing::op_gradient_error(
      [&](ad::Tape&, ad::Var v) { return ranking_loss_surrogate(v, anchor, cards, 10.0); }, y);
  EXPECT_LT(err, 1e-5);
}

TEST(Energy, ConflictFreeConfigurationIsNearZero) {
  const TransferMatrix a = single_edge();
  EXPECT_LT(energy(std::vector<double>{0.9, 0.9}, std::vector<double>{0.9}, a, 2, 1), 0.01);
}

TEST(Energy, ConflictRaisesEnergy) {
  TransferMatrix path(3, 2);
  path.set(0, 0, 1);
  path.set(1, 0, 1);
  path.set(1, 1, 1);
  path.set(2, 1, 1);
  const std::vector<double> t = {0.95, 0.05};
  const double consistent = energy(std::vector<double>{0.95, 0.95, 0.05}, t, path, 2, 1);
  const double conflict = energy(std::vector<double>{0.05, 0.05, 0.95}, t, path, 2, 1);
  EXPECT_GT(conflict, consistent);
  EXPECT_GT(energy_count(std::vector<double>{0.05, 0.05, 0.95}, t, path, 2, 1),
            energy_count(std::vector<double>{0.95, 0.95, 0.05}, t, path, 2, 1));
}

TEST(Energy, ZeroMatrixGivesSurrogateOnConstantProjection) {
  std::mt19937_64 rng(5);
  const TransferMatrix zero(4, 3);
  const auto c = uniform(rng, 4);
  const auto t = uniform(rng, 3);
  const double expected = ranking_loss_surrogate(c, std::vector<double>(4, 0.0), 2) +
                          ranking_loss_surrogate(t, std::vector<double>(3, 0.0), 1);
  EXPECT_NEAR(energy(c, t, zero, 2, 1), expected, 1e-15);
}

TEST(Energy, EqualsSumOfProjectedRankingLosses) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const std::size_t m = 2 + rng() % 6, n = 1 + rng() % 8;
    const TransferMatrix a = random_matrix(rng, m, n);
    const auto c = uniform(rng, m);
    const auto t = uniform(rng, n);
    std::vector<double> tc(m, 0.0), ct(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t k = 0; k < n; ++k) {
        tc[r] += t[k] * a.at(r, k);
        ct[k] += c[r] * a.at(r, k);
      }
    const std::size_t cc = rng() % (m + 1), tcard = rng() % (n + 1);
    EXPECT_NEAR(energy(c, t, a, cc, tcard),
                surrogate_oracle(c, tc, cc, 10.0) + surrogate_oracle(t, ct, tcard, 10.0), 1e-12);
    EXPECT_NEAR(energy_count(c, t, a, cc, tcard),
                count_oracle(c, tc, cc) + count_oracle(t, ct, tcard), 1e-15);
  }
}

TEST(Energy, GradientFlowsIntoBothPredictions) {
  std::mt19937_64 rng(7);
  const TransferMatrix a = random_matrix(rng, 4, 5);
  const std::vector<std::size_t> cc = {2, 1}, tc = {2, 3};
  const Tensor c0 = random_tensor({2, 4}, 21, 0.05, 0.95);
  const Tensor t0 = random_tensor({2, 5}, 22, 0.05, 0.95);
  auto run = [&](const Tensor& c, const Tensor& t, Tensor* gc, Tensor* gt) {
    ad::Tape tape;
    const ad::Var vc = tape.leaf(c), vt = tape.leaf(t);
    const ad::Var e = energy(vc, vt, a, cc, tc, 10.0);
    if (gc) {
      tape.backward(e);
      *gc = vc.grad();
      *gt = vt.grad();
    }
    return e.value()[0];
  };
  Tensor gc, gt;
  run(c0, t0, &gc, &gt);
  const auto nc = central_difference([&](const Tensor& c) { return run(c, t0, nullptr, nullptr); }, c0);
  const auto nt = central_difference([&](const Tensor& t) { return run(c0, t, nullptr, nullptr); }, t0);
  EXPECT_LT(worst_error(gc, nc), 1e-6);
  EXPECT_LT(worst_error(gt, nt), 1e-6);
  double norm_c = 0.0, norm_t = 0.0;
  for (std::size_t i = 0; i < gc.size(); ++i) norm_c += std::abs(gc[i]);
  for (std::size_t i = 0; i < gt.size(); ++i) norm_t += std::abs(gt[i]);
  EXPECT_GT(norm_c, 0.0);
  EXPECT_GT(norm_t, 0.0);
}

TEST(Energy, RejectsMismatchedShapes) {
  const TransferMatrix a = single_edge();
  EXPECT_THROW(energy(std::vector<double>{0.5}, std::vector<double>{0.5}, a, 1, 1), ShapeError);
}

TEST(MutualTransfer, ReducesToTransitionCrossEntropy) {
  std::mt19937_64 rng(8);
  const TransferMatrix a = random_matrix(rng, 3, 4);
  const auto tc = bits(rng, 3), tt = bits(rng, 4);
  const auto c = uniform(rng, 3), t = uniform(rng, 4);
  LossConfig cfg;
  cfg.energy_weight = 0.0;
  cfg.include_concept_ce = false;
  EXPECT_EQ(mutual_transfer_loss(tc, tt, c, t, a, cfg), cross_entropy(tt, t));
}

TEST(MutualTransfer, EqualsTermByTermSum) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    const std::size_t m = 2 + rng() % 5, n = 1 + rng() % 6;
    const TransferMatrix a = random_matrix(rng, m, n);
    const auto tc = bits(rng, m), tt = bits(rng, n);
    const auto c = uniform(rng, m), t = uniform(rng, n);
    LossConfig cfg;
    cfg.energy_weight = 0.5 + static_cast<double>(i % 3);
    const double e = energy(c, t, a, ones(tc), ones(tt));
    EXPECT_NEAR(mutual_transfer_loss(tc, tt, c, t, a, cfg),
                ce_oracle(tt, t) + cfg.energy_weight * e + ce_oracle(tc, c), 1e-12);
    cfg.include_concept_ce = false;
    EXPECT_NEAR(mutual_transfer_loss(tc, tt, c, t, a, cfg),
                ce_oracle(tt, t) + cfg.energy_weight * e, 1e-12);
  }
}

TEST(MutualTransfer, SmallForPerfectConflictFreePredictions) {
  const TransferMatrix a = single_edge();
  const std::vector<std::uint8_t> tc = {1, 1}, tt = {1};
  const std::vector<double> c = {1.0 - 1e-6, 1.0 - 1e-6}, t = {1.0 - 1e-6};
  EXPECT_LT(mutual_transfer_loss(tc, tt, c, t, a, LossConfig{}), 0.05);
}

TEST(Variants, ParseAndPrint) {
  for (Variant v : {Variant::kCI, Variant::kCTI, Variant::kCoCTI, Variant::kCoCTIMTL})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(parse_variant("coCTI-MTL"), Variant::kCoCTIMTL);
  EXPECT_THROW(parse_variant("MTL"), Error);
}

TEST(Variants, MatchPerTermOracles) {
  std::mt19937_64 rng(10);
  const TransferMatrix a = random_matrix(rng, 4, 5);
  const auto tc = bits(rng, 4), tt = bits(rng, 5);
  Prediction pred;
  pred.concept_probs = uniform(rng, 4);
  pred.transition_probs = uniform(rng, 5);
  const double hc = ce_oracle(tc, pred.concept_probs);
  const double ht = ce_oracle(tt, pred.transition_probs);
  const double e = energy(pred.concept_probs, pred.transition_probs, a, ones(tc), ones(tt));
  LossConfig cfg;
  cfg.variant = Variant::kCI;
  const double ci = loss_for_variant(cfg, tc, tt, pred, a);
  EXPECT_NEAR(ci, hc, 1e-12);
  cfg.variant = Variant::kCTI;
  const double cti = loss_for_variant(cfg, tc, tt, pred, a);
  EXPECT_NEAR(cti, ht, 1e-12);
  cfg.variant = Variant::kCoCTI;
  const double co = loss_for_variant(cfg, tc, tt, pred, a);
  EXPECT_EQ(co, ci + cti);
  cfg.variant = Variant::kCoCTIMTL;
  EXPECT_NEAR(loss_for_variant(cfg, tc, tt, pred, a), ht + e + hc, 1e-12);
  cfg.energy_weight = 0.0;
  EXPECT_EQ(loss_for_variant(cfg, tc, tt, pred, a), co);
}

TEST(Variants, TapeLossAveragesRowsAndDifferentiates) {
  std::mt19937_64 rng(11);
  const TransferMatrix a = random_matrix(rng, 3, 4);
  BatchLabels labels;
  labels.concepts = Tensor::matrix(2, 3, {1, 1, 0, 0, 1, 1});
  labels.transitions = Tensor::matrix(2, 4, {1, 0, 0, 0, 0, 1, 1, 0});
  labels.concept_cardinality = {2, 2};
  labels.transition_cardinality = {1, 2};
  const Tensor c0 = random_tensor({2, 3}, 31, 0.05, 0.95);
  const Tensor t0 = random_tensor({2, 4}, 32, 0.05, 0.95);
  LossConfig cfg;
  auto run = [&](const Tensor& c, const Tensor& t, Tensor* gc, Tensor* gt) {
    ad::Tape tape;
    ForwardVars f;
    f.concept_probs = tape.leaf(c);
    f.transition_probs = tape.leaf(t);
    const ad::Var l = loss_for_variant(cfg, f, labels, a);
    if (gc) {
      tape.backward(l);
      *gc = f.concept_probs.grad();
      *gt = f.transition_probs.grad();
    }
    return l.value()[0];
  };
  double per_row = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    std::vector<std::uint8_t> tc(3), tt(4);
    Prediction p;
    for (std::size_t k = 0; k < 3; ++k) {
      tc[k] = static_cast<std::uint8_t>(labels.concepts.at(r, k));
      p.concept_probs.push_back(c0.at(r, k));
    }
    for (std::size_t k = 0; k < 4; ++k) {
      tt[k] = static_cast<std::uint8_t>(labels.transitions.at(r, k));
      p.transition_probs.push_back(t0.at(r, k));
    }
    per_row += loss_for_variant(cfg, tc, tt, p, a);
  }
  Tensor gc, gt;
  EXPECT_NEAR(run(c0, t0, &gc, &gt), per_row / 2.0, 1e-12);
  const auto nc = central_difference([&](const Tensor& c) { return run(c, t0, nullptr, nullptr); }, c0);
  const auto nt = central_difference([&](const Tensor& t) { return run(c0, t, nullptr, nullptr); }, t0);
  EXPECT_LT(worst_error(gc, nc), 1e-6);
  EXPECT_LT(worst_error(gt, nt), 1e-6);
}

}  // namespace
}  // namespace intentgraph
