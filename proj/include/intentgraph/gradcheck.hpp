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

#ifndef INTENTGRAPH_GRADCHECK_HPP_
#define INTENTGRAPH_GRADCHECK_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "intentgraph/concept_graph.hpp"
#include "intentgraph/losses.hpp"
#include "intentgraph/model.hpp"

namespace intentgraph {

struct GradcheckEntry {
  std::string name;
  std::size_t size = 0;
  double max_relative_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> parameters;
  double max_relative_error = 0.0;
  double loss = 0.0;
};

// Compares the tape gradient of the batch loss with central differences for
// every entry of every parameter.
GradcheckReport gradient_check(const Model& model, std::span<const EncodedQuery> batch,
                               const LossConfig& loss, const TransferMatrix& a,
                               double step = 1e-5);

// Uniform random ids; label vectors keep at least one positive and one
// negative entry whenever the width allows.
std::vector<EncodedQuery> random_queries(const ModelConfig& config, std::size_t count,
                                         std::size_t min_len, std::size_t max_len,
                                         std::uint64_t seed);

// A ring c0 -> c1 -> ... -> c0 plus chords, sized to the requested counts.
ConceptGraph random_ring_graph(std::size_t num_concepts, std::size_t num_transitions);

}  // namespace intentgraph

#endif  // INTENTGRAPH_GRADCHECK_HPP_
