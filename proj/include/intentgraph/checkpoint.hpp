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

#ifndef INTENTGRAPH_CHECKPOINT_HPP_
#define INTENTGRAPH_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "intentgraph/concept_graph.hpp"
#include "intentgraph/corpus.hpp"
#include "intentgraph/model.hpp"

namespace intentgraph {

// Checkpoint files are JSON documents:
//
//   {
//     "format": "intentgraph-checkpoint",
//     "version": 1,
//     "manifest": {
//       "config": {"word_dim": .., "pos_dim": .., "hidden_dim": ..,
//                  "word_out_dim": .., "pos_out_dim": .., "num_concepts": ..,
//                  "num_transitions": .., "word_vocab": .., "pos_vocab": ..,
//                  "output_activation": "softmax" | "identity"},
//       "graph_hash": "<16 hex digits>",
//       "vocab_hash": "<16 hex digits>",
//       "variant": "coCTI_MTL",
//       "seed": 7
//     },
//     "vocabulary": {"words": [...], "pos": [...]},
//     "parameters": {"<name>": {"shape": [r, c], "values": [...]}, ...}
//   }
//
// Parameters keep model order and values are row-major. Doubles are written
// in shortest round-trip form, so save/load is bit-exact. Readers reject a
// different "format" or a newer "version"; unknown keys are ignored.
inline constexpr int kCheckpointVersion = 1;

struct CheckpointManifest {
  ModelConfig config;
  std::uint64_t graph_hash = 0;
  std::uint64_t vocab_hash = 0;
  std::string variant;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  CheckpointManifest manifest;
  Vocabulary vocab;
  ParameterSet params;

  Model model() const { return Model(manifest.config, params); }
};

Checkpoint make_checkpoint(const Model& model, const Vocabulary& vocab, const ConceptGraph& graph,
                           std::string variant, std::uint64_t seed);

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view json);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Throws LookupError when the checkpoint was trained against a different
// graph or vocabulary.
void verify_manifest(const Checkpoint& checkpoint, const ConceptGraph& graph,
                     const Vocabulary& vocab);

}  // namespace intentgraph

#endif  // INTENTGRAPH_CHECKPOINT_HPP_
