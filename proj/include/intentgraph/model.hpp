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

#ifndef INTENTGRAPH_MODEL_HPP_
#define INTENTGRAPH_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentgraph/autodiff.hpp"
#include "intentgraph/encoded_query.hpp"
#include "intentgraph/tensor.hpp"

namespace intentgraph {

enum class OutputActivation { kSoftmax, kIdentity };

std::string to_string(OutputActivation a);
OutputActivation parse_output_activation(std::string_view s);

struct ModelConfig {
  std::size_t word_dim = 100;
  std::size_t pos_dim = 20;
  std::size_t hidden_dim = 100;
  // Output-state sizes of the word and POS chains; 0 means hidden_dim.
  std::size_t word_out_dim = 0;
  std::size_t pos_out_dim = 0;
  std::size_t num_concepts = 0;
  std::size_t num_transitions = 0;
  std::size_t word_vocab = 0;
  std::size_t pos_vocab = 0;
  OutputActivation output_activation = OutputActivation::kSoftmax;

  std::size_t word_output_dim() const { return word_out_dim ? word_out_dim : hidden_dim; }
  std::size_t pos_output_dim() const { return pos_out_dim ? pos_out_dim : hidden_dim; }
  // Throws ShapeError when a dimension is zero.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Named trainable tensors in a fixed order.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& value(std::size_t i) { return values_[i]; }
  const Tensor& value(std::size_t i) const { return values_[i]; }
  std::optional<std::size_t> find(std::string_view name) const;

  std::vector<Tensor>& values() { return values_; }
  const std::vector<Tensor>& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Tensor> zero_gradients() const;
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

// GRU weights bound to a tape. Input weights are (D_h x D_in), recurrent
// weights (D_h x D_h), W_ho is (D_o x D_h).
struct GruVars {
  ad::Var W_xr, W_xz, W_xh;
  ad::Var R_hr, R_hz, W_hh;
  ad::Var b_r, b_z, b_h;
  ad::Var W_ho;
};

struct EncoderVars {
  ad::Var W_theta;  // (D_ow + D_op) x 1
  ad::Var b_theta;  // (1)
  ad::Var W_ce;     // M x (D_ow + D_op)
  ad::Var b_ce;     // (M)
  ad::Var W_te;     // N x 2 D_h
  ad::Var b_te;     // (N)
};

struct BoundModel {
  ad::Var embed_word;  // D_word x V_word
  ad::Var embed_pos;   // D_pos x V_pos
  GruVars word_rnn;
  GruVars pos_rnn;
  EncoderVars encoders;
  OutputActivation output_activation = OutputActivation::kSoftmax;
};

// Queries right-padded to a common length. Padded positions use id 0 and
// are excluded through the mask.
struct PaddedBatch {
  std::size_t batch = 0;
  std::size_t max_len = 0;
  std::vector<std::size_t> lengths;
  // word_ids[k][b], pos_ids[k][b]: token k of query b.
  std::vector<std::vector<std::size_t>> word_ids;
  std::vector<std::vector<std::size_t>> pos_ids;
  // B x K, 1 where position k < length of query b.
  Tensor mask;

  static PaddedBatch from(std::span<const EncodedQuery> queries);
  static PaddedBatch from(std::span<const EncodedQuery* const> queries);
  // Per-step B x width masks for blending recurrent states.
  Tensor step_mask(std::size_t k, std::size_t width) const;
  bool fully_dense() const;
};

struct Embedded {
  std::vector<ad::Var> words;  // per position, B x D_word
  std::vector<ad::Var> pos;    // per position, B x D_pos
};

// Column lookup of the embedding tables, equal to E * one_hot(id).
Embedded embed_lookup(const BoundModel& model, const PaddedBatch& batch);

struct GruStep {
  ad::Var hidden;  // B x D_h
  ad::Var output;  // B x D_o
};

// One GRU step:
//   r = sigmoid(x W_xr' + h R_hr' + b_r)
//   z = sigmoid(x W_xz' + h R_hz' + b_z)
//   c = tanh(x W_xh' + (r * h) W_hh' + b_h)
//   h' = z * h + (1 - z) * c,   o = act(h' W_ho')
// With a mask, rows where it is 0 keep h unchanged.
GruStep gru_step(ad::Var x, ad::Var h_prev, const GruVars& w, OutputActivation act,
                 const Tensor* mask = nullptr);

struct ChainResult {
  std::vector<ad::Var> hidden;
  std::vector<ad::Var> outputs;
  ad::Var last_hidden;
};

// Left-to-right recurrence from h_0 = 0. With a batch, last_hidden holds each
// row's state at its own length.
ChainResult run_chain(std::span<const ad::Var> inputs, const GruVars& w, OutputActivation act,
                      const PaddedBatch* batch = nullptr);

struct ConceptEncoding {
  ad::Var token_scores;   // B x K, rows sum to 1 over valid positions
  ad::Var concept_probs;  // B x M
};

// Scores each joint output [o_w, o_p] with relu(o W_theta + b_theta),
// normalizes the scores per query (uniform when all are zero), pools
// v = sum_k s_k o_k and returns sigmoid(v W_ce' + b_ce).
ConceptEncoding concept_encode(std::span<const ad::Var> word_outputs,
                               std::span<const ad::Var> pos_outputs, const EncoderVars& w,
                               const Tensor& mask);

// sigmoid([h_w, h_p] W_te' + b_te) on the final hidden states.
ad::Var transition_encode(ad::Var word_last_hidden, ad::Var pos_last_hidden,
                          const EncoderVars& w);

struct ForwardVars {
  ad::Var concept_probs;     // B x M
  ad::Var transition_probs;  // B x N
  ad::Var token_scores;      // B x K
};

ForwardVars forward(const BoundModel& model, const PaddedBatch& batch);

struct Prediction {
  std::vector<double> concept_probs;
  std::vector<double> transition_probs;
  std::vector<double> token_scores;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

class Model {
 public:
  // Xavier weights and zero biases, drawn in parameter order from `seed`.
  static Model initialize(const ModelConfig& config, std::uint64_t seed);

  // Adopts existing parameters; throws ShapeError if any shape disagrees
  // with `config`.
  Model(ModelConfig config, ParameterSet params);

  const ModelConfig& config() const { return config_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // Puts every parameter on `tape`. With `grads` (one buffer per parameter)
  // adjoints accumulate there; without, parameters are constants.
  BoundModel bind(ad::Tape& tape, std::vector<Tensor>* grads = nullptr) const;

  Prediction predict(const EncodedQuery& query) const;
  // Padded batched forward pass; one Prediction per query.
  std::vector<Prediction> predict_batch(std::span<const EncodedQuery> queries) const;

  // Throws if the query ids or labels do not fit this model's dimensions.
  void check_query(const EncodedQuery& query) const;

 private:
  ModelConfig config_;
  ParameterSet params_;
};

// Expected parameter names and shapes for `config`, in model order.
std::vector<std::pair<std::string, Tensor::Shape>> parameter_layout(const ModelConfig& config);

}  // namespace intentgraph

#endif  // INTENTGRAPH_MODEL_HPP_
