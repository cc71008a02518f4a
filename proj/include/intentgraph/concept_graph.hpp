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

#ifndef INTENTGRAPH_CONCEPT_GRAPH_HPP_
#define INTENTGRAPH_CONCEPT_GRAPH_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intentgraph/encoded_query.hpp"
#include "intentgraph/tensor.hpp"

namespace intentgraph {

struct Concept {
  std::size_t id = 0;
  std::string name;
};

// Directed edge source -> target between two concepts.
struct Transition {
  std::size_t id = 0;
  std::size_t source = 0;
  std::size_t target = 0;

  bool is_self_loop() const { return source == target; }
};

// M x N incidence matrix: entry (m, n) is 1 iff concept m is the source or
// the target of transition n.
class TransferMatrix {
 public:
  TransferMatrix() = default;
  TransferMatrix(std::size_t concepts, std::size_t transitions)
      : rows_(concepts), cols_(transitions), entries_(concepts * transitions, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint8_t at(std::size_t m, std::size_t n) const { return entries_[m * cols_ + n]; }
  void set(std::size_t m, std::size_t n, std::uint8_t v) { entries_[m * cols_ + n] = v; }

  Tensor to_tensor() const;
  // N x M transpose as a tensor.
  Tensor transposed_tensor() const;

  friend bool operator==(const TransferMatrix&, const TransferMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> entries_;
};

// The domain concept graph. Ids are dense and follow declaration order.
// Concept names are matched case-insensitively. Immutable once built.
class ConceptGraph {
 public:
  // Validates names and edges (given as concept index pairs) and derives the
  // transfer matrix. Self-loops are accepted and reported in warnings().
  ConceptGraph(std::vector<std::string> concept_names,
               std::vector<std::pair<std::size_t, std::size_t>> edges);

  // Parses the `[concepts]` / `[transitions]` text format.
  static ConceptGraph parse(std::string_view text);
  static ConceptGraph load(const std::filesystem::path& path);

  std::size_t num_concepts() const { return concepts_.size(); }
  std::size_t num_transitions() const { return transitions_.size(); }
  const std::vector<Concept>& concepts() const { return concepts_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const TransferMatrix& transfer() const { return transfer_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::optional<std::size_t> find_concept(std::string_view name) const;
  std::optional<std::size_t> find_transition(std::size_t source, std::size_t target) const;
  // "Source -> Target" with the declared concept names.
  std::string transition_name(std::size_t id) const;

  // Canonical text form; parse(to_text()) rebuilds an identical graph.
  std::string to_text() const;
  std::uint64_t fingerprint() const;

 private:
  std::vector<Concept> concepts_;
  std::vector<Transition> transitions_;
  TransferMatrix transfer_;
  std::vector<std::string> warnings_;
};

TransferMatrix build_transfer_matrix(const ConceptGraph& graph);

// Concepts mentioned and transitions activated by one query; sorted, unique.
struct ActiveConceptGraph {
  std::vector<std::size_t> concepts;
  std::vector<std::size_t> transitions;

  bool empty() const { return concepts.empty() && transitions.empty(); }
  friend bool operator==(const ActiveConceptGraph&, const ActiveConceptGraph&) = default;
};

ActiveConceptGraph active_subgraph(const ConceptGraph& graph,
                                   std::span<const std::size_t> concept_ids,
                                   std::span<const std::size_t> transition_ids);
// Reads the multi-hot labels of an encoded query.
ActiveConceptGraph active_subgraph(const ConceptGraph& graph, const EncodedQuery& query);

// True iff the undirected graph over concepts plus transition endpoints has
// exactly one component. The empty graph counts as connected.
bool is_connected(const ActiveConceptGraph& active, const ConceptGraph& graph);

struct FrequencyReport {
  std::vector<std::size_t> concept_counts;
  std::vector<std::size_t> transition_counts;
  // (shape, count) sorted by count descending, then shape. A shape is the
  // query's transition set written as "A -> B; B -> C".
  std::vector<std::pair<std::string, std::size_t>> top_shapes;
  std::size_t queries = 0;
  std::size_t connected = 0;

  // CSV with header kind,name,count; concepts and transitions in id order,
  // shapes in rank order, then summary rows "queries" and "connected".
  std::string to_csv(const ConceptGraph& graph) const;
};

FrequencyReport graph_stats(std::span<const EncodedQuery> dataset,
                            const ConceptGraph& graph, std::size_t top_k = 9);

}  // namespace intentgraph

#endif  // INTENTGRAPH_CONCEPT_GRAPH_HPP_
