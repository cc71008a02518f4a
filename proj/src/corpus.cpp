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

#include "intentgraph/corpus.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "intentgraph/error.hpp"
#include "intentgraph/util.hpp"

namespace intentgraph {

namespace {

constexpr std::string_view kRecordKeys[] = {"text", "pos", "concept", "concept_transition"};

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

// "a|b|c" -> {a, b, c}; an empty field has no entries.
std::vector<std::string> split_field(const std::string& field, std::string_view what) {
  if (trim(field).empty()) return {};
  auto parts = split(field, "|");
  for (const auto& p : parts) {
    if (p.empty()) throw ParseError("empty entry in \"" + std::string(what) + "\"");
  }
  return parts;
}

}  // namespace

RawQuery parse_record(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON record: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  for (std::string_view key : kRecordKeys) {
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError("record is missing key \"" + std::string(key) + "\"");
    if (!it->is_string()) throw ParseError("key \"" + std::string(key) + "\" is not a string");
  }
  RawQuery q;
  q.words = split_whitespace(j["text"].get<std::string>());
  q.pos = split_whitespace(j["pos"].get<std::string>());
  if (q.words.empty()) throw ParseError("record has no tokens");
  if (q.words.size() != q.pos.size()) {
    throw ParseError("record has " + std::to_string(q.words.size()) + " tokens but " +
                     std::to_string(q.pos.size()) + " POS tags");
  }
  q.concepts = split_field(j["concept"].get<std::string>(), "concept");
  const std::string chains =
      replace_all(j["concept_transition"].get<std::string>(), "→", "->");
  for (const std::string& chain : split_field(chains, "concept_transition")) {
    const auto nodes = split(chain, "->");
    if (nodes.size() < 2 ||
        std::any_of(nodes.begin(), nodes.end(), [](const auto& n) { return n.empty(); })) {
      throw ParseError("malformed transition chain '" + chain + "'");
    }
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      q.transitions.emplace_back(nodes[i], nodes[i + 1]);
    }
  }
  return q;
}

std::string serialize_record(const RawQuery& query) {
  const auto join = [](const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += sep;
      out += items[i];
    }
    return out;
  };
  std::vector<std::string> chains;
  std::string last;
  for (const auto& [source, target] : query.transitions) {
    if (!chains.empty() && source == last) {
      chains.back() += " -> " + target;
    } else {
      chains.push_back(source + " -> " + target);
    }
    last = target;
  }
  nlohmann::ordered_json j;
  j["text"] = join(query.words, " ");
  j["pos"] = join(query.pos, " ");
  j["concept"] = join(query.concepts, "|");
  j["concept_transition"] = join(chains, "|");
  return j.dump();
}

std::vector<RawQuery> parse_dataset(std::string_view jsonl) {
  std::vector<RawQuery> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RawQuery> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

std::string serialize_dataset(std::span<const RawQuery> queries) {
  std::string out;
  for (const RawQuery& q : queries) out += serialize_record(q) + "\n";
  return out;
}

// ---- Vocabulary ----------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary({}, {}) {}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::string> pos_tags) {
  for (auto* list : {&words, &pos_tags}) {
    if (list->empty() || list->front() != kUnknownToken) {
      list->insert(list->begin(), std::string(kUnknownToken));
    }
  }
  words_ = std::move(words);
  pos_tags_ = std::move(pos_tags);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!word_index_.emplace(words_[i], i).second) {
      throw ParseError("duplicate word '" + words_[i] + "' in vocabulary");
    }
  }
  for (std::size_t i = 0; i < pos_tags_.size(); ++i) {
    if (!pos_index_.emplace(pos_tags_[i], i).second) {
      throw ParseError("duplicate POS tag '" + pos_tags_[i] + "' in vocabulary");
    }
  }
}

namespace {

std::vector<std::string> ranked_tokens(const std::map<std::string, std::size_t>& counts,
                                       std::size_t min_count) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= min_count && token != Vocabulary::kUnknownToken) kept.emplace_back(token, count);
  }
  // std::map iteration is lexicographic, so a stable sort on count keeps
  // ties in lexicographic order.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (auto& [token, count] : kept) out.push_back(std::move(token));
  return out;
}

}  // namespace

Vocabulary Vocabulary::build(std::span<const RawQuery> records, std::size_t min_count) {
  if (records.empty()) throw Error("cannot build a vocabulary from an empty corpus");
  if (min_count < 1) throw Error("min_count must be at least 1");
  std::map<std::string, std::size_t> word_counts, pos_counts;
  for (const RawQuery& r : records) {
    for (const auto& w : r.words) ++word_counts[w];
    for (const auto& p : r.pos) ++pos_counts[p];
  }
  return Vocabulary(ranked_tokens(word_counts, min_count), ranked_tokens(pos_counts, min_count));
}

std::size_t Vocabulary::word_id(std::string_view word) const {
  const auto it = word_index_.find(std::string(word));
  return it == word_index_.end() ? kUnknownId : it->second;
}

std::size_t Vocabulary::pos_id(std::string_view tag) const {
  const auto it = pos_index_.find(std::string(tag));
  return it == pos_index_.end() ? kUnknownId : it->second;
}

std::uint64_t Vocabulary::fingerprint() const {
  Fnv1a h;
  h.update(std::uint64_t{words_.size()});
  for (const auto& w : words_) h.update(w).update("\n");
  h.update(std::uint64_t{pos_tags_.size()});
  for (const auto& p : pos_tags_) h.update(p).update("\n");
  return h.digest();
}

// ---- Encoding ------------------------------------------------------------

EncodedQuery encode(const RawQuery& record, const Vocabulary& vocab,
                    const ConceptGraph& graph) {
  if (record.words.size() != record.pos.size() || record.words.empty()) {
    throw ParseError("record tokens and POS tags are misaligned");
  }
  EncodedQuery q;
  for (const auto& w : record.words) q.word_ids.push_back(vocab.word_id(w));
  for (const auto& p : record.pos) q.pos_ids.push_back(vocab.pos_id(p));
  q.concept_labels.assign(graph.num_concepts(), 0);
  q.transition_labels.assign(graph.num_transitions(), 0);
  for (const auto& name : record.concepts) {
    const auto id = graph.find_concept(name);
    if (!id) throw LookupError("concept '" + name + "' is not in the graph");
    q.concept_labels[*id] = 1;
  }
  for (const auto& [source, target] : record.transitions) {
    const auto s = graph.find_concept(source);
    const auto t = graph.find_concept(target);
    const auto id = s && t ? graph.find_transition(*s, *t) : std::nullopt;
    if (!id) {
      throw LookupError("transition '" + source + " -> " + target + "' is not in the graph");
    }
    q.transition_labels[*id] = 1;
  }
  return q;
}

std::vector<EncodedQuery> encode_all(std::span<const RawQuery> records,
                                     const Vocabulary& vocab, const ConceptGraph& graph) {
  std::vector<EncodedQuery> out;
  out.reserve(records.size());
  for (const RawQuery& r : records) out.push_back(encode(r, vocab, graph));
  return out;
}

// ---- Splits --------------------------------------------------------------

SplitIndices split_indices(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw Error("need at least 10 records to split, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
  SplitIndices s;
  s.seed = seed;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

std::uint64_t SplitIndices::fingerprint() const {
  Fnv1a h;
  for (const auto* part : {&train, &validation, &test}) {
    h.update(std::uint64_t{part->size()});
    for (std::size_t i : *part) h.update(std::uint64_t{i});
  }
  return h.digest();
}

DatasetSplit split_dataset(std::span<const EncodedQuery> records, std::uint64_t seed) {
  const SplitIndices idx = split_indices(records.size(), seed);
  DatasetSplit out;
  out.seed = seed;
  for (std::size_t i : idx.train) out.train.push_back(records[i]);
  for (std::size_t i : idx.validation) out.validation.push_back(records[i]);
  for (std::size_t i : idx.test) out.test.push_back(records[i]);
  return out;
}

// ---- Synthetic corpus ----------------------------------------------------

namespace {

std::string pool_prefix(const std::string& name) {
  std::string out;
  for (char c : to_lower(name)) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

constexpr std::string_view kConceptTags[] = {"n", "nz", "vn", "v"};
constexpr std::string_view kNoiseTags[] = {"u", "x", "a", "d"};
constexpr std::string_view kConnectorTag = "p";

struct Sampled {
  std::vector<std::size_t> order;        // concept mention order
  std::vector<std::size_t> transitions;  // transition ids
};

// Grows a tree of transitions from a random edge, preferring to extend the
// chain tail, and returns its concepts in topological order.
Sampled sample_connected(const ConceptGraph& g, std::size_t count, double chain_bias,
                         std::mt19937_64& rng) {
  const auto& edges = g.transitions();
  std::vector<bool> in_set(g.num_concepts(), false);
  std::vector<std::size_t> added;
  Sampled s;
  const Transition& first = edges[std::uniform_int_distribution<std::size_t>(0, edges.size() - 1)(rng)];
  s.transitions.push_back(first.id);
  for (std::size_t c : {first.source, first.target}) {
    if (!in_set[c]) added.push_back(c);
    in_set[c] = true;
  }
  std::size_t tail = first.target;
  std::bernoulli_distribution extend_tail(chain_bias);
  while (s.transitions.size() < count) {
    std::vector<std::size_t> candidates;
    if (extend_tail(rng)) {
      for (const Transition& t : edges)
        if (t.source == tail && !in_set[t.target]) candidates.push_back(t.id);
    }
    if (candidates.empty()) {
      for (const Transition& t : edges)
        if (in_set[t.source] != in_set[t.target]) candidates.push_back(t.id);
    }
    if (candidates.empty()) break;
    const Transition& t =
        edges[candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)]];
    const std::size_t fresh = in_set[t.source] ? t.target : t.source;
    in_set[fresh] = true;
    added.push_back(fresh);
    s.transitions.push_back(t.id);
    tail = fresh == t.target ? t.target : tail;
  }
  // Kahn's algorithm, ties broken by insertion order.
  std::vector<std::size_t> indegree(g.num_concepts(), 0);
  for (std::size_t id : s.transitions)
    if (!edges[id].is_self_loop()) ++indegree[edges[id].target];
  std::vector<bool> done(g.num_concepts(), false);
  while (s.order.size() < added.size()) {
    bool progressed = false;
    for (std::size_t c : added) {
      if (done[c] || indegree[c] != 0) continue;
      done[c] = progressed = true;
      s.order.push_back(c);
      for (std::size_t id : s.transitions)
        if (edges[id].source == c && !edges[id].is_self_loop()) --indegree[edges[id].target];
      break;
    }
    if (!progressed) break;  // unreachable for trees
  }
  return s;
}

Sampled sample_independent(const ConceptGraph& g, std::size_t count, std::mt19937_64& rng) {
  std::vector<std::size_t> ids(g.num_transitions());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(std::min(count, ids.size()));
  Sampled s;
  s.transitions = ids;
  for (std::size_t id : ids) {
    for (std::size_t c : {g.transitions()[id].source, g.transitions()[id].target})
      if (std::find(s.order.begin(), s.order.end(), c) == s.order.end()) s.order.push_back(c);
  }
  return s;
}

}  // namespace

GeneratedCorpus generate_synthetic(const ConceptGraph& graph, const GeneratorConfig& config) {
  const std::size_t m = graph.num_concepts();
  if (graph.num_transitions() == 0) throw Error("generator needs a graph with transitions");
  if (config.vocab_size < 10 * m) {
    throw Error("vocab_size must be at least 10 x number of concepts");
  }
  if (config.n_queries == 0 || config.templates_per_transition == 0 ||
      config.noise_rate < 0.0 || config.noise_rate >= 1.0 || config.chain_bias < 0.0 ||
      config.chain_bias > 1.0 || config.extra_concept_rate < 0.0 ||
      config.extra_concept_rate > 1.0 || config.transition_count_weights.empty()) {
    throw Error("inconsistent generator config");
  }
  const std::size_t pool = (config.vocab_size * 6 / 10) / m;
  const std::size_t connectors = config.templates_per_transition;
  if (pool * m + connectors >= config.vocab_size) {
    throw Error("inconsistent generator config: no room left for noise words");
  }
  const std::size_t noise = config.vocab_size - pool * m - connectors;

  std::vector<std::string> prefixes;
  for (const Concept& c : graph.concepts()) {
    std::string p = pool_prefix(c.name);
    if (std::find(prefixes.begin(), prefixes.end(), p) != prefixes.end()) {
      p += "_" + std::to_string(c.id);
    }
    prefixes.push_back(std::move(p));
  }

  std::mt19937_64 rng(config.seed);
  std::discrete_distribution<std::size_t> transition_count(
      config.transition_count_weights.begin(), config.transition_count_weights.end());
  std::bernoulli_distribution add_noise(config.noise_rate);
  std::bernoulli_distribution add_extra(config.extra_concept_rate);
  std::bernoulli_distribution primary_tag(0.8);
  std::uniform_int_distribution<std::size_t> pick_pool(0, pool - 1);
  std::uniform_int_distribution<std::size_t> pick_connector(0, connectors - 1);
  std::uniform_int_distribution<std::size_t> pick_noise(0, noise - 1);
  std::uniform_int_distribution<std::size_t> pick_tag(0, 3);
  std::uniform_int_distribution<std::size_t> trigger_len(1, 2);

  GeneratedCorpus out;
  out.concept_counts.assign(m, 0);
  out.transition_counts.assign(graph.num_transitions(), 0);
  for (std::size_t qi = 0; qi < config.n_queries; ++qi) {
    const std::size_t count = transition_count(rng) + 1;
    Sampled s = config.connected ? sample_connected(graph, count, config.chain_bias, rng)
                                 : sample_independent(graph, count, rng);
    if (add_extra(rng) && s.order.size() < m) {
      std::vector<std::size_t> outside;
      for (std::size_t c = 0; c < m; ++c)
        if (std::find(s.order.begin(), s.order.end(), c) == s.order.end()) outside.push_back(c);
      const std::size_t extra =
          outside[std::uniform_int_distribution<std::size_t>(0, outside.size() - 1)(rng)];
      const std::size_t at = std::uniform_int_distribution<std::size_t>(0, s.order.size())(rng);
      s.order.insert(s.order.begin() + static_cast<std::ptrdiff_t>(at), extra);
    }

    RawQuery q;
    const auto emit = [&](std::string word, std::string_view tag) {
      q.words.push_back(std::move(word));
      q.pos.emplace_back(tag);
      if (add_noise(rng)) {
        q.words.push_back("noise_" + std::to_string(pick_noise(rng)));
        q.pos.emplace_back(kNoiseTags[pick_tag(rng)]);
      }
    };
    for (std::size_t i = 0; i < s.order.size(); ++i) {
      const std::size_t c = s.order[i];
      if (i > 0) emit("link_" + std::to_string(pick_connector(rng)), kConnectorTag);
      const std::size_t words = trigger_len(rng);
      for (std::size_t w = 0; w < words; ++w) {
        const std::string_view tag =
            primary_tag(rng) ? kConceptTags[c % 4] : kConceptTags[pick_tag(rng)];
        emit(prefixes[c] + "_" + std::to_string(pick_pool(rng)), tag);
      }
    }
    std::vector<std::size_t> mentioned = s.order;
    std::sort(mentioned.begin(), mentioned.end());
    for (std::size_t c : mentioned) {
      q.concepts.push_back(graph.concepts()[c].name);
      ++out.concept_counts[c];
    }
    std::sort(s.transitions.begin(), s.transitions.end());
    for (std::size_t id : s.transitions) {
      const Transition& t = graph.transitions()[id];
      q.transitions.emplace_back(graph.concepts()[t.source].name, graph.concepts()[t.target].name);
      ++out.transition_counts[id];
    }
    out.queries.push_back(std::move(q));
  }
  return out;
}

std::string GeneratedCorpus::tallies_csv(const ConceptGraph& graph) const {
  std::string out = "kind,name,count\n";
  for (std::size_t c = 0; c < concept_counts.size(); ++c) {
    out += "concept," + csv_field(graph.concepts()[c].name) + "," +
           std::to_string(concept_counts[c]) + "\n";
  }
  for (std::size_t t = 0; t < transition_counts.size(); ++t) {
    out += "transition," + csv_field(graph.transition_name(t)) + "," +
           std::to_string(transition_counts[t]) + "\n";
  }
  return out;
}

}  // namespace intentgraph
