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

#include "intentgraph/error.hpp"

namespace intentgraph {

using ad::Var;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kCI: return "CI";
    case Variant::kCTI: return "CTI";
    case Variant::kCoCTI: return "coCTI";
    case Variant::kCoCTIMTL: return "coCTI_MTL";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "CI") return Variant::kCI;
  if (s == "CTI") return Variant::kCTI;
  if (s == "coCTI") return Variant::kCoCTI;
  if (s == "coCTI_MTL" || s == "coCTI-MTL") return Variant::kCoCTIMTL;
  throw Error("unknown loss variant '" + std::string(s) + "'");
}

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_cardinality(std::size_t card, std::size_t labels) {
  if (card > labels) {
    throw ShapeError("ground-truth cardinality " + std::to_string(card) + " exceeds label count " +
                     std::to_string(labels));
  }
}

double pair_normalizer(std::size_t card, std::size_t labels) {
  if (card == 0 || card == labels) return 0.0;
  return static_cast<double>(card) * static_cast<double>(labels - card);
}

Tensor row_tensor(std::span<const double> values) {
  return Tensor::matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor row_tensor(std::span<const std::uint8_t> values) {
  Tensor t({1, values.size()});
  for (std::size_t i = 0; i < values.size(); ++i) t[i] = values[i];
  return t;
}

std::size_t count_ones(std::span<const std::uint8_t> v) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](auto x) { return x != 0; }));
}

}  // namespace

// ---- Tape-level ----------------------------------------------------------

Var cross_entropy(Var probs, const Tensor& truth) {
  const Tensor& P = probs.value();
  if (P.size() != truth.size() || P.rows() != truth.rows()) {
    throw ShapeError("cross_entropy: probabilities " + P.shape_string() + " vs truth " +
                     truth.shape_string());
  }
  double total = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double p = std::clamp(P[i], kProbEpsilon, 1.0 - kProbEpsilon);
    total -= truth[i] * std::log(p) + (1.0 - truth[i]) * std::log(1.0 - p);
  }
  const Var parents[] = {probs};
  return probs.tape().record(
      "cross_entropy", Tensor::scalar(total), parents, [probs, truth](ad::Tape& t, Var self) {
        const double g = t.grad(self)[0];
        const Tensor& P = t.value(probs);
        Tensor& gP = t.grad(probs);
        for (std::size_t i = 0; i < P.size(); ++i) {
          const double p = P[i];
          if (p < kProbEpsilon || p > 1.0 - kProbEpsilon) continue;
          gP[i] += g * (-truth[i] / p + (1.0 - truth[i]) / (1.0 - p));
        }
      });
}

Var ranking_loss_surrogate(Var projected, const Tensor& anchor,
                           std::span<const std::size_t> cardinalities, double temperature) {
  const Tensor& Y = projected.value();
  if (Y.rows() != anchor.rows() || Y.cols() != anchor.cols() ||
      cardinalities.size() != Y.rows()) {
    throw ShapeError("ranking loss: projected " + Y.shape_string() + " vs anchor " +
                     anchor.shape_string());
  }
  if (!(temperature > 0.0)) throw Error("ranking loss temperature must be positive");
  const std::size_t rows = Y.rows(), l = Y.cols();
  std::vector<double> inv_norm(rows, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    check_cardinality(cardinalities[r], l);
    const double norm = pair_normalizer(cardinalities[r], l);
    if (norm == 0.0) continue;
    inv_norm[r] = 1.0 / norm;
    const double* x = &anchor[r * l];
    const double* y = &Y[r * l];
    double row = 0.0;
    for (std::size_t p = 0; p < l; ++p)
      for (std::size_t q = 0; q < l; ++q)
        if (p != q && x[p] >= x[q])
          row += softplus(temperature * (y[q] - y[p])) / temperature;
    total += row * inv_norm[r];
  }
  const Var parents[] = {projected};
  return projected.tape().record(
      "ranking_loss_surrogate", Tensor::scalar(total), parents,
      [projected, anchor, inv_norm, rows, l, temperature](ad::Tape& t, Var self) {
        const double g = t.grad(self)[0];
        const Tensor& Y = t.value(projected);
        Tensor& gY = t.grad(projected);
        for (std::size_t r = 0; r < rows; ++r) {
          if (inv_norm[r] == 0.0) continue;
          const double* x = &anchor[r * l];
          const double* y = &Y[r * l];
          double* gy = &gY[r * l];
          for (std::size_t p = 0; p < l; ++p)
            for (std::size_t q = 0; q < l; ++q) {
              if (p == q || x[p] < x[q]) continue;
              const double d = g * inv_norm[r] * logistic(temperature * (y[q] - y[p]));
              gy[q] += d;
              gy[p] -= d;
            }
        }
      });
}

Var energy(Var concept_probs, Var transition_probs, const TransferMatrix& a,
           std::span<const std::size_t> concept_cardinalities,
           std::span<const std::size_t> transition_cardinalities, double temperature) {
  ad::Tape& tape = concept_probs.tape();
  if (concept_probs.value().cols() != a.rows() || transition_probs.value().cols() != a.cols()) {
    throw ShapeError("energy: prediction sizes do not match the transfer matrix");
  }
  const Var c = concept_probs;
  const Var tr = transition_probs;
  if (c.value().rank() != 2 || tr.value().rank() != 2) {
    throw ShapeError("energy: expects B x M and B x N matrices");
  }
  const Var transitions_as_concepts = ad::matmul(tr, tape.constant(a.transposed_tensor()));
  const Var concepts_as_transitions = ad::matmul(c, tape.constant(a.to_tensor()));
  return ranking_loss_surrogate(transitions_as_concepts, c.value(), concept_cardinalities,
                                temperature) +
         ranking_loss_surrogate(concepts_as_transitions, tr.value(), transition_cardinalities,
                                temperature);
}

BatchLabels BatchLabels::from(std::span<const EncodedQuery* const> queries) {
  if (queries.empty()) throw ShapeError("empty batch");
  const std::size_t m = queries.front()->concept_labels.size();
  const std::size_t n = queries.front()->transition_labels.size();
  BatchLabels out;
  out.concepts = Tensor({queries.size(), m});
  out.transitions = Tensor({queries.size(), n});
  for (std::size_t b = 0; b < queries.size(); ++b) {
    const EncodedQuery& q = *queries[b];
    if (q.concept_labels.size() != m || q.transition_labels.size() != n) {
      throw ShapeError("batch mixes label sizes");
    }
    for (std::size_t i = 0; i < m; ++i) out.concepts.at(b, i) = q.concept_labels[i];
    for (std::size_t i = 0; i < n; ++i) out.transitions.at(b, i) = q.transition_labels[i];
    out.concept_cardinality.push_back(count_ones(q.concept_labels));
    out.transition_cardinality.push_back(count_ones(q.transition_labels));
  }
  return out;
}

Var loss_for_variant(const LossConfig& config, const ForwardVars& prediction,
                     const BatchLabels& labels, const TransferMatrix& a) {
  const Var c = prediction.concept_probs;
  const Var t = prediction.transition_probs;
  Var total;
  switch (config.variant) {
    case Variant::kCI:
      total = cross_entropy(c, labels.concepts);
      break;
    case Variant::kCTI:
      total = cross_entropy(t, labels.transitions);
      break;
    case Variant::kCoCTI:
      total = cross_entropy(c, labels.concepts) + cross_entropy(t, labels.transitions);
      break;
    case Variant::kCoCTIMTL:
      total = cross_entropy(t, labels.transitions);
      if (config.energy_weight != 0.0) {
        total = total + ad::scale(energy(c, t, a, labels.concept_cardinality,
                                         labels.transition_cardinality, config.temperature),
                                  config.energy_weight);
      }
      if (config.include_concept_ce) total = total + cross_entropy(c, labels.concepts);
      break;
  }
  return ad::scale(total, 1.0 / static_cast<double>(c.value().rows()));
}

// ---- Value-level ---------------------------------------------------------

double cross_entropy(std::span<const std::uint8_t> truth, std::span<const double> probs) {
  if (truth.size() != probs.size()) throw ShapeError("cross_entropy: length mismatch");
  ad::Tape tape;
  return cross_entropy(tape.constant(row_tensor(probs)), row_tensor(truth)).value()[0];
}

double ranking_loss_count(std::span<const double> anchor, std::span<const double> projected,
                          std::size_t truth_cardinality) {
  if (anchor.size() != projected.size()) throw ShapeError("ranking loss: length mismatch");
  const std::size_t l = anchor.size();
  check_cardinality(truth_cardinality, l);
  const double norm = pair_normalizer(truth_cardinality, l);
  if (norm == 0.0) return 0.0;
  // Counts pairs with anchor[q] <= anchor[p] and projected[q] > projected[p]
  // by sweeping anchors in ascending tie groups over a Fenwick tree indexed
  // by projected-score rank.
  std::vector<double> levels(projected.begin(), projected.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const auto level_of = [&](double y) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), y) -
                                    levels.begin());
  };
  std::vector<std::size_t> tree(levels.size() + 1, 0);
  const auto insert = [&](std::size_t level) {
    for (std::size_t i = level + 1; i < tree.size(); i += i & (~i + 1)) ++tree[i];
  };
  const auto count_at_or_below = [&](std::size_t level) {
    std::size_t total = 0;
    for (std::size_t i = level + 1; i > 0; i -= i & (~i + 1)) total += tree[i];
    return total;
  };
  std::vector<std::size_t> order(l);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return anchor[a] < anchor[b]; });
  std::size_t violations = 0, inserted = 0;
  for (std::size_t i = 0; i < l;) {
    std::size_t end = i;
    while (end < l && anchor[order[end]] == anchor[order[i]]) insert(level_of(projected[order[end++]]));
    inserted = end;
    for (; i < end; ++i) violations += inserted - count_at_or_below(level_of(projected[order[i]]));
  }
  return static_cast<double>(violations) / norm;
}

double ranking_loss_surrogate(std::span<const double> anchor, std::span<const double> projected,
                              std::size_t truth_cardinality, double temperature) {
  if (anchor.size() != projected.size()) throw ShapeError("ranking loss: length mismatch");
  ad::Tape tape;
  const std::size_t cards[] = {truth_cardinality};
  return ranking_loss_surrogate(tape.constant(row_tensor(projected)), row_tensor(anchor), cards,
                                temperature)
      .value()[0];
}

std::vector<double> project_to_transitions(std::span<const double> concept_probs,
                                           const TransferMatrix& a) {
  if (concept_probs.size() != a.rows()) throw ShapeError("projection: length mismatch");
  std::vector<double> out(a.cols(), 0.0);
  for (std::size_t m = 0; m < a.rows(); ++m)
    for (std::size_t n = 0; n < a.cols(); ++n) out[n] += concept_probs[m] * a.at(m, n);
  return out;
}

std::vector<double> project_to_concepts(std::span<const double> transition_probs,
                                        const TransferMatrix& a) {
  if (transition_probs.size() != a.cols()) throw ShapeError("projection: length mismatch");
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t m = 0; m < a.rows(); ++m)
    for (std::size_t n = 0; n < a.cols(); ++n) out[m] += transition_probs[n] * a.at(m, n);
  return out;
}

double energy(std::span<const double> concept_probs, std::span<const double> transition_probs,
              const TransferMatrix& a, std::size_t concept_cardinality,
              std::size_t transition_cardinality, double temperature) {
  ad::Tape tape;
  const std::size_t cc[] = {concept_cardinality};
  const std::size_t tc[] = {transition_cardinality};
  return energy(tape.constant(row_tensor(concept_probs)),
                tape.constant(row_tensor(transition_probs)), a, cc, tc, temperature)
      .value()[0];
}

double energy_count(std::span<const double> concept_probs,
                    std::span<const double> transition_probs, const TransferMatrix& a,
                    std::size_t concept_cardinality, std::size_t transition_cardinality) {
  return ranking_loss_count(concept_probs, project_to_concepts(transition_probs, a),
                            concept_cardinality) +
         ranking_loss_count(transition_probs, project_to_transitions(concept_probs, a),
                            transition_cardinality);
}

namespace {

double value_loss(const LossConfig& config, std::span<const std::uint8_t> truth_concepts,
                  std::span<const std::uint8_t> truth_transitions,
                  std::span<const double> concept_probs,
                  std::span<const double> transition_probs, const TransferMatrix& a) {
  ad::Tape tape;
  EncodedQuery labels;
  labels.concept_labels.assign(truth_concepts.begin(), truth_concepts.end());
  labels.transition_labels.assign(truth_transitions.begin(), truth_transitions.end());
  const EncodedQuery* rows[] = {&labels};
  const BatchLabels batch = BatchLabels::from(rows);
  ForwardVars pred;
  pred.concept_probs = tape.constant(row_tensor(concept_probs));
  pred.transition_probs = tape.constant(row_tensor(transition_probs));
  return loss_for_variant(config, pred, batch, a).value()[0];
}

}  // namespace

double mutual_transfer_loss(std::span<const std::uint8_t> truth_concepts,
                            std::span<const std::uint8_t> truth_transitions,
                            std::span<const double> concept_probs,
                            std::span<const double> transition_probs, const TransferMatrix& a,
                            const LossConfig& config) {
  LossConfig mtl = config;
  mtl.variant = Variant::kCoCTIMTL;
  return value_loss(mtl, truth_concepts, truth_transitions, concept_probs, transition_probs, a);
}

double loss_for_variant(const LossConfig& config, std::span<const std::uint8_t> truth_concepts,
                        std::span<const std::uint8_t> truth_transitions,
                        const Prediction& prediction, const TransferMatrix& a) {
  return value_loss(config, truth_concepts, truth_transitions, prediction.concept_probs,
                    prediction.transition_probs, a);
}

}  // namespace intentgraph
