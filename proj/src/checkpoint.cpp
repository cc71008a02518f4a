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

#include "intentgraph/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "intentgraph/error.hpp"
#include "intentgraph/util.hpp"

namespace intentgraph {

namespace {

constexpr std::string_view kFormat = "intentgraph-checkpoint";

std::uint64_t parse_hex(const std::string& s) {
  try {
    return std::stoull(s, nullptr, 16);
  } catch (const std::exception&) {
    throw ParseError("bad hash '" + s + "' in checkpoint");
  }
}

}  // namespace

Checkpoint make_checkpoint(const Model& model, const Vocabulary& vocab, const ConceptGraph& graph,
                           std::string variant, std::uint64_t seed) {
  Checkpoint c;
  c.manifest.config = model.config();
  c.manifest.graph_hash = graph.fingerprint();
  c.manifest.vocab_hash = vocab.fingerprint();
  c.manifest.variant = std::move(variant);
  c.manifest.seed = seed;
  c.vocab = vocab;
  c.params = model.parameters();
  return c;
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  const ModelConfig& cfg = checkpoint.manifest.config;
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kCheckpointVersion;
  nlohmann::ordered_json config;
  config["word_dim"] = cfg.word_dim;
  config["pos_dim"] = cfg.pos_dim;
  config["hidden_dim"] = cfg.hidden_dim;
  config["word_out_dim"] = cfg.word_output_dim();
  config["pos_out_dim"] = cfg.pos_output_dim();
  config["num_concepts"] = cfg.num_concepts;
  config["num_transitions"] = cfg.num_transitions;
  config["word_vocab"] = cfg.word_vocab;
  config["pos_vocab"] = cfg.pos_vocab;
  config["output_activation"] = to_string(cfg.output_activation);
  j["manifest"]["config"] = config;
  j["manifest"]["graph_hash"] = hex64(checkpoint.manifest.graph_hash);
  j["manifest"]["vocab_hash"] = hex64(checkpoint.manifest.vocab_hash);
  j["manifest"]["variant"] = checkpoint.manifest.variant;
  j["manifest"]["seed"] = checkpoint.manifest.seed;
  j["vocabulary"]["words"] = checkpoint.vocab.words();
  j["vocabulary"]["pos"] = checkpoint.vocab.pos_tags();
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
    const Tensor& t = checkpoint.params.value(i);
    params[checkpoint.params.name(i)] = {{"shape", t.shape()}, {"values", t.values()}};
  }
  j["parameters"] = std::move(params);
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
    if (j.value("format", "") != kFormat) throw ParseError("not an intentgraph checkpoint");
    if (j.at("version").get<int>() > kCheckpointVersion) {
      throw ParseError("checkpoint version " + std::to_string(j.at("version").get<int>()) +
                       " is newer than supported version " +
                       std::to_string(kCheckpointVersion));
    }
    Checkpoint c;
    const auto& m = j.at("manifest");
    const auto& cfg = m.at("config");
    ModelConfig& mc = c.manifest.config;
    mc.word_dim = cfg.at("word_dim");
    mc.pos_dim = cfg.at("pos_dim");
    mc.hidden_dim = cfg.at("hidden_dim");
    mc.word_out_dim = cfg.at("word_out_dim");
    mc.pos_out_dim = cfg.at("pos_out_dim");
    mc.num_concepts = cfg.at("num_concepts");
    mc.num_transitions = cfg.at("num_transitions");
    mc.word_vocab = cfg.at("word_vocab");
    mc.pos_vocab = cfg.at("pos_vocab");
    mc.output_activation = parse_output_activation(cfg.at("output_activation").get<std::string>());
    if (mc.word_out_dim == mc.hidden_dim) mc.word_out_dim = 0;
    if (mc.pos_out_dim == mc.hidden_dim) mc.pos_out_dim = 0;
    c.manifest.graph_hash = parse_hex(m.at("graph_hash"));
    c.manifest.vocab_hash = parse_hex(m.at("vocab_hash"));
    c.manifest.variant = m.value("variant", "");
    c.manifest.seed = m.value("seed", std::uint64_t{0});
    c.vocab = Vocabulary(j.at("vocabulary").at("words").get<std::vector<std::string>>(),
                         j.at("vocabulary").at("pos").get<std::vector<std::string>>());
    for (const auto& [name, entry] : j.at("parameters").items()) {
      c.params.add(name, Tensor(entry.at("shape").get<Tensor::Shape>(),
                                entry.at("values").get<std::vector<double>>()));
    }
    if (c.vocab.fingerprint() != c.manifest.vocab_hash) {
      throw LookupError("checkpoint vocabulary does not match its manifest hash");
    }
    Model(mc, c.params);  // validates parameter names and shapes
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

void verify_manifest(const Checkpoint& checkpoint, const ConceptGraph& graph,
                     const Vocabulary& vocab) {
  const CheckpointManifest& m = checkpoint.manifest;
  if (m.graph_hash != graph.fingerprint()) {
    throw LookupError("checkpoint was trained on a different concept graph (" +
                      hex64(m.graph_hash) + " vs " + hex64(graph.fingerprint()) + ")");
  }
  if (m.vocab_hash != vocab.fingerprint()) {
    throw LookupError("checkpoint was trained with a different vocabulary (" +
                      hex64(m.vocab_hash) + " vs " + hex64(vocab.fingerprint()) + ")");
  }
  if (m.config.num_concepts != graph.num_concepts() ||
      m.config.num_transitions != graph.num_transitions() ||
      m.config.word_vocab != vocab.word_size() || m.config.pos_vocab != vocab.pos_size()) {
    throw LookupError("checkpoint dimensions do not match the graph or vocabulary");
  }
}

}  // namespace intentgraph
