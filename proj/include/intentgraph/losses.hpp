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

#ifndef INTENTGRAPH_LOSSES_HPP_
#define INTENTGRAPH_LOSSES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "intentgraph/autodiff.hpp"
#include "intentgraph/concept_graph.hpp"
#include "intentgraph/model.hpp"

namespace intentgraph {

// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-12;

enum class Variant {
  kCI,        // concept cross entropy only
  kCTI,       // transition cross entropy only
  kCoCTI,     // both cross entropies
  kCoCTIMTL,  // mutual transfer loss
};

std::string to_string(Variant v);
// Accepts CI, CTI, coCTI, coCTI_MTL and coCTI-MTL.
Variant parse_variant(std::string_view s);

struct LossConfig {
  Variant variant = Variant::kCoCTIMTL;
  double energy_weight = 1.0;
  // Adds the concept cross entropy to the mutual transfer loss.
  bool include_concept_ce = true;
  // Sharpness of the softplus relaxation of the ranking loss.
  double temperature = 10.0;
};

// ---- Value-level API -----------------------------------------------------

// Multi-label binary cross entropy:
//   -sum_l [y_l log p_l + (1 - y_l) log(1 - p_l)].
double cross_entropy(std::span<const std::uint8_t> truth, std::span<const double> probs);

// Number of ordered pairs (p, q) with projected[p] < projected[q] while
// anchor[p] >= anchor[q], divided by c (L - c) where c is the ground-truth
// cardinality. Returns 0 when c is 0 or L.
double ranking_loss_count(std::span<const double> anchor, std::span<const double> projected,
                          std::size_t truth_cardinality);

// Smooth relaxation of the count: each pair with anchor[p] >= anchor[q]
// contributes softplus(t (projected[q] - projected[p])) / t. Anchor
// comparisons carry no gradient.
double ranking_loss_surrogate(std::span<const double> anchor, std::span<const double> projected,
                              std::size_t truth_cardinality, double temperature = 10.0);

// Concept scores projected to transitions (C A) and transitions projected to
// concepts (T A').
std::vector<double> project_to_transitions(std::span<const double> concept_probs,
                                           const TransferMatrix& a);
std::vector<double> project_to_concepts(std::span<const double> transition_probs,
                                        const TransferMatrix& a);

// E(C, T) = L_R(C, T A') + L_R(T, C A) with the surrogate ranking loss.
double energy(std::span<const double> concept_probs, std::span<const double> transition_probs,
              const TransferMatrix& a, std::size_t concept_cardinality,
              std::size_t transition_cardinality, double temperature = 10.0);
// Same with the counting ranking loss; used for evaluation.
double energy_count(std::span<const double> concept_probs,
                    std::span<const double> transition_probs, const TransferMatrix& a,
                    std::size_t concept_cardinality, std::size_t transition_cardinality);

// H(T, T_hat) + energy_weight E(C_hat, T_hat) [+ H(C, C_hat)].
double mutual_transfer_loss(std::span<const std::uint8_t> truth_concepts,
                            std::span<const std::uint8_t> truth_transitions,
                            std::span<const double> concept_probs,
                            std::span<const double> transition_probs, const TransferMatrix& a,
                            const LossConfig& config);

double loss_for_variant(const LossConfig& config, std::span<const std::uint8_t> truth_concepts,
                        std::span<const std::uint8_t> truth_transitions,
                        const Prediction& prediction, const TransferMatrix& a);

// ---- Tape-level API (B rows, summed over rows) ---------------------------

ad::Var cross_entropy(ad::Var probs, const Tensor& truth);
ad::Var ranking_loss_surrogate(ad::Var projected, const Tensor& anchor,
                               std::span<const std::size_t> cardinalities, double temperature);
ad::Var energy(ad::Var concept_probs, ad::Var transition_probs, const TransferMatrix& a,
               std::span<const std::size_t> concept_cardinalities,
               std::span<const std::size_t> transition_cardinalities, double temperature);

// Batch labels as B x M and B x N tensors plus per-row cardinalities.
struct BatchLabels {
  Tensor concepts;
  Tensor transitions;
  std::vector<std::size_t> concept_cardinality;
  std::vector<std::size_t> transition_cardinality;

  static BatchLabels from(std::span<const EncodedQuery* const> queries);
};

// Loss of `config.variant` averaged over the batch rows.
ad::Var loss_for_variant(const LossConfig& config, const ForwardVars& prediction,
                         const BatchLabels& labels, const TransferMatrix& a);

}  // namespace intentgraph

#endif  // INTENTGRAPH_LOSSES_HPP_
