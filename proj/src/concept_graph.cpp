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

#include "intentgraph/concept_graph.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "intentgraph/error.hpp"
#include "intentgraph/util.hpp"

namespace intentgraph {

Tensor TransferMatrix::to_tensor() const {
  Tensor t({rows_, cols_});
  for (std::size_t i = 0; i < entries_.size(); ++i) t[i] = entries_[i];
  return t;
}

Tensor TransferMatrix::transposed_tensor() const {
  Tensor t({cols_, rows_});
  for (std::size_t m = 0; m < rows_; ++m)
    for (std::size_t n = 0; n < cols_; ++n) t[n * rows_ + m] = at(m, n);
  return t;
}

ConceptGraph::ConceptGraph(std::vector<std::string> concept_names,
                           std::vector<std::pair<std::size_t, std::size_t>> edges) {
  if (concept_names.empty()) throw ParseError("concept graph has no concepts");
  for (std::size_t i = 0; i < concept_names.size(); ++i) {
    std::string name(trim(concept_names[i]));
    if (name.empty()) throw ParseError("concept " + std::to_string(i) + " has an empty name");
    if (find_concept(name)) throw ParseError("duplicate concept '" + name + "'");
    concepts_.push_back({i, std::move(name)});
  }
  for (const auto& [source, target] : edges) {
    if (source >= concepts_.size() || target >= concepts_.size()) {
      throw LookupError("transition endpoint outside concept range");
    }
    if (find_transition(source, target)) {
      throw ParseError("duplicate transition '" + concepts_[source].name + " -> " +
                       concepts_[target].name + "'");
    }
    if (source == target) {
      warnings_.push_back("self-loop on concept '" + concepts_[source].name + "'");
    }
    transitions_.push_back({transitions_.size(), source, target});
  }
  transfer_ = build_transfer_matrix(*this);
}

ConceptGraph ConceptGraph::parse(std::string_view text) {
  enum class Section { kNone, kConcepts, kTransitions } section = Section::kNone;
  std::vector<std::string> names;
  std::vector<std::pair<std::string, std::size_t>> raw_edges;  // text, line
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view content = line;
    if (auto hash = content.find('#'); hash != std::string_view::npos) {
      content = content.substr(0, hash);
    }
    content = trim(content);
    if (content.empty()) continue;
    if (content == "[concepts]") {
      section = Section::kConcepts;
    } else if (content == "[transitions]") {
      section = Section::kTransitions;
    } else if (content.front() == '[') {
      throw ParseError("line " + std::to_string(line_no) + ": unknown section " +
                       std::string(content));
    } else if (section == Section::kConcepts) {
      names.emplace_back(content);
    } else if (section == Section::kTransitions) {
      raw_edges.emplace_back(std::string(content), line_no);
    } else {
      throw ParseError("line " + std::to_string(line_no) + ": entry outside a section");
    }
  }
  if (names.empty()) throw ParseError("graph file declares no concepts");

  // Resolve names against a provisional graph so lookups share one rule.
  const ConceptGraph nodes_only(names, {});
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [edge, at] : raw_edges) {
    const auto parts = split(edge, "->");
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
      throw ParseError("line " + std::to_string(at) + ": expected 'Source -> Target'");
    }
    const auto source = nodes_only.find_concept(parts[0]);
    const auto target = nodes_only.find_concept(parts[1]);
    if (!source || !target) {
      throw LookupError("line " + std::to_string(at) + ": unknown concept '" +
                        (source ? parts[1] : parts[0]) + "'");
    }
    edges.emplace_back(*source, *target);
  }
  return ConceptGraph(std::move(names), std::move(edges));
}

ConceptGraph ConceptGraph::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::optional<std::size_t> ConceptGraph::find_concept(std::string_view name) const {
  const std::string key = to_lower(trim(name));
  for (const Concept& c : concepts_) {
    if (to_lower(c.name) == key) return c.id;
  }
  return std::nullopt;
}

std::optional<std::size_t> ConceptGraph::find_transition(std::size_t source,
                                                         std::size_t target) const {
  for (const Transition& t : transitions_) {
    if (t.source == source && t.target == target) return t.id;
  }
  return std::nullopt;
}

std::string ConceptGraph::transition_name(std::size_t id) const {
  const Transition& t = transitions_.at(id);
  return concepts_[t.source].name + " -> " + concepts_[t.target].name;
}

std::string ConceptGraph::to_text() const {
  std::string out = "[concepts]\n";
  for (const Concept& c : concepts_) out += c.name + "\n";
  out += "[transitions]\n";
  for (const Transition& t : transitions_) out += transition_name(t.id) + "\n";
  return out;
}

std::uint64_t ConceptGraph::fingerprint() const { return Fnv1a().update(to_text()).digest(); }

TransferMatrix build_transfer_matrix(const ConceptGraph& graph) {
  TransferMatrix a(graph.num_concepts(), graph.num_transitions());
  for (const Transition& t : graph.transitions()) {
    a.set(t.source, t.id, 1);
    a.set(t.target, t.id, 1);
  }
  return a;
}

ActiveConceptGraph active_subgraph(const ConceptGraph& graph,
                                   std::span<const std::size_t> concept_ids,
                                   std::span<const std::size_t> transition_ids) {
  ActiveConceptGraph active;
  for (std::size_t id : concept_ids) {
    if (id >= graph.num_concepts()) {
      throw LookupError("concept id " + std::to_string(id) + " out of range");
    }
    active.concepts.push_back(id);
  }
  for (std::size_t id : transition_ids) {
    if (id >= graph.num_transitions()) {
      throw LookupError("transition id " + std::to_string(id) + " out of range");
    }
    active.transitions.push_back(id);
  }
  for (auto* ids : {&active.concepts, &active.transitions}) {
    std::sort(ids->begin(), ids->end());
    ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
  }
  return active;
}

ActiveConceptGraph active_subgraph(const ConceptGraph& graph, const EncodedQuery& query) {
  if (query.concept_labels.size() != graph.num_concepts() ||
      query.transition_labels.size() != graph.num_transitions()) {
    throw LookupError("query labels do not match the graph dimensions");
  }
  std::vector<std::size_t> concepts, transitions;
  for (std::size_t m = 0; m < query.concept_labels.size(); ++m)
    if (query.concept_labels[m]) concepts.push_back(m);
  for (std::size_t n = 0; n < query.transition_labels.size(); ++n)
    if (query.transition_labels[n]) transitions.push_back(n);
  return active_subgraph(graph, concepts, transitions);
}

bool is_connected(const ActiveConceptGraph& active, const ConceptGraph& graph) {
  std::vector<std::size_t> parent(graph.num_concepts());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<bool> involved(graph.num_concepts(), false);
  for (std::size_t c : active.concepts) involved.at(c) = true;
  for (std::size_t id : active.transitions) {
    const Transition& t = graph.transitions().at(id);
    involved[t.source] = involved[t.target] = true;
    parent[find(t.source)] = find(t.target);
  }
  std::size_t components = 0;
  for (std::size_t c = 0; c < involved.size(); ++c) {
    if (involved[c] && find(c) == c) ++components;
  }
  return components <= 1;
}

FrequencyReport graph_stats(std::span<const EncodedQuery> dataset,
                            const ConceptGraph& graph, std::size_t top_k) {
  FrequencyReport report;
  report.concept_counts.assign(graph.num_concepts(), 0);
  report.transition_counts.assign(graph.num_transitions(), 0);
  std::map<std::string, std::size_t> shapes;
  for (const EncodedQuery& q : dataset) {
    const ActiveConceptGraph active = active_subgraph(graph, q);
    for (std::size_t c : active.concepts) ++report.concept_counts[c];
    for (std::size_t t : active.transitions) ++report.transition_counts[t];
    std::string shape;
    for (std::size_t t : active.transitions) {
      if (!shape.empty()) shape += "; ";
      shape += graph.transition_name(t);
    }
    ++shapes[shape.empty() ? "(no transitions)" : shape];
    ++report.queries;
    if (is_connected(active, graph)) ++report.connected;
  }
  report.top_shapes.assign(shapes.begin(), shapes.end());
  std::stable_sort(report.top_shapes.begin(), report.top_shapes.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (report.top_shapes.size() > top_k) report.top_shapes.resize(top_k);
  return report;
}

std::string FrequencyReport::to_csv(const ConceptGraph& graph) const {
  std::string out = "kind,name,count\n";
  for (std::size_t m = 0; m < concept_counts.size(); ++m) {
    out += "concept," + csv_field(graph.concepts()[m].name) + "," +
           std::to_string(concept_counts[m]) + "\n";
  }
  for (std::size_t n = 0; n < transition_counts.size(); ++n) {
    out += "transition," + csv_field(graph.transition_name(n)) + "," +
           std::to_string(transition_counts[n]) + "\n";
  }
  for (const auto& [shape, count] : top_shapes) {
    out += "shape," + csv_field(shape) + "," + std::to_string(count) + "\n";
  }
  out += "summary,queries," + std::to_string(queries) + "\n";
  out += "summary,connected," + std::to_string(connected) + "\n";
  return out;
}

}  // namespace intentgraph
