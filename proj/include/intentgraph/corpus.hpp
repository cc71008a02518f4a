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

#ifndef INTENTGRAPH_CORPUS_HPP_
#define INTENTGRAPH_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "intentgraph/concept_graph.hpp"
#include "intentgraph/encoded_query.hpp"

namespace intentgraph {

// One labeled query as it appears in a dataset file. Transitions are stored
// pairwise; chains in the file are expanded on parse.
struct RawQuery {
  std::vector<std::string> words;
  std::vector<std::string> pos;
  std::vector<std::string> concepts;
  std::vector<std::pair<std::string, std::string>> transitions;

  friend bool operator==(const RawQuery&, const RawQuery&) = default;
};

// Parses one JSON Lines record with keys "text", "pos", "concept" and
// "concept_transition". Throws ParseError on malformed input.
RawQuery parse_record(std::string_view line);
// Inverse of parse_record. Consecutive pairs sharing an endpoint are written
// as one chain ("a -> b -> c"), separate chains are joined with '|'.
std::string serialize_record(const RawQuery& query);

std::vector<RawQuery> parse_dataset(std::string_view jsonl);
std::vector<RawQuery> load_dataset(const std::filesystem::path& path);
std::string serialize_dataset(std::span<const RawQuery> queries);

// Token -> index maps for words and POS tags. Index 0 is the unknown token in
// both. Remaining tokens are ordered by frequency (descending), then
// lexicographically.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknownId = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();
  Vocabulary(std::vector<std::string> words, std::vector<std::string> pos_tags);

  static Vocabulary build(std::span<const RawQuery> records, std::size_t min_count = 1);

  std::size_t word_id(std::string_view word) const;
  std::size_t pos_id(std::string_view tag) const;
  std::size_t word_size() const { return words_.size(); }
  std::size_t pos_size() const { return pos_tags_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::string>& pos_tags() const { return pos_tags_; }

  std::uint64_t fingerprint() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.words_ == b.words_ && a.pos_tags_ == b.pos_tags_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::string> pos_tags_;
  std::unordered_map<std::string, std::size_t> word_index_;
  std::unordered_map<std::string, std::size_t> pos_index_;
};

// Looks up token ids and resolves label names against `graph`. Throws
// LookupError for concepts or transitions the graph does not define.
EncodedQuery encode(const RawQuery& record, const Vocabulary& vocab,
                    const ConceptGraph& graph);
std::vector<EncodedQuery> encode_all(std::span<const RawQuery> records,
                                     const Vocabulary& vocab, const ConceptGraph& graph);

// Index partition of n records into 70/10/20 train/validation/test.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  std::uint64_t fingerprint() const;
};

struct DatasetSplit {
  std::vector<EncodedQuery> train;
  std::vector<EncodedQuery> validation;
  std::vector<EncodedQuery> test;
  std::uint64_t seed = 0;
};

SplitIndices split_indices(std::size_t n, std::uint64_t seed);
DatasetSplit split_dataset(std::span<const EncodedQuery> records, std::uint64_t seed);

// ---- Synthetic corpus ----------------------------------------------------

struct GeneratorConfig {
  std::size_t n_queries = 2000;
  // Distinct word types: concept trigger pools, connector words and noise.
  std::size_t vocab_size = 300;
  // Connector words available between consecutive concept mentions. They
  // are shared by all transitions and carry no label information.
  std::size_t templates_per_transition = 4;
  // Probability of inserting a noise token after each emitted token.
  double noise_rate = 0.1;
  std::uint64_t seed = 1;

  // Relative weights of drawing 1, 2, 3, ... transitions per query.
  std::vector<double> transition_count_weights = {0.13, 0.27, 0.60};
  // Probability of extending the active graph from the chain tail.
  double chain_bias = 0.8;
  // Probability of mentioning one extra concept outside every transition.
  double extra_concept_rate = 0.13;
  // Sample transitions as one connected tree; otherwise independently.
  bool connected = true;
};

struct GeneratedCorpus {
  std::vector<RawQuery> queries;
  // Ground-truth tallies kept while sampling, indexed by graph ids.
  std::vector<std::size_t> concept_counts;
  std::vector<std::size_t> transition_counts;

  // kind,name,count rows for every concept and transition.
  std::string tallies_csv(const ConceptGraph& graph) const;
};

// Word pools: concept m owns trigger words "<concept>_<j>"; connector words
// are "link_<j>"; the rest of the vocabulary is "noise_<j>". In connected
// mode mentions follow a topological order of the sampled transitions, so
// every active transition's source precedes its target.
GeneratedCorpus generate_synthetic(const ConceptGraph& graph, const GeneratorConfig& config);

}  // namespace intentgraph

#endif  // INTENTGRAPH_CORPUS_HPP_
