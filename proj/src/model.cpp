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

#include "intentgraph/model.hpp"

#include <algorithm>
#include <random>

#include "intentgraph/error.hpp"
#include "intentgraph/optim.hpp"

namespace intentgraph {

using ad::Var;

std::string to_string(OutputActivation a) {
  return a == OutputActivation::kSoftmax ? "softmax" : "identity";
}

OutputActivation parse_output_activation(std::string_view s) {
  if (s == "softmax") return OutputActivation::kSoftmax;
  if (s == "identity") return OutputActivation::kIdentity;
  throw Error("unknown output activation '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  for (std::size_t d : {word_dim, pos_dim, hidden_dim, word_output_dim(), pos_output_dim(),
                        num_concepts, num_transitions, word_vocab, pos_vocab}) {
    if (d == 0) throw ShapeError("model dimensions must all be at least 1");
  }
}

// ---- ParameterSet --------------------------------------------------------

std::size_t ParameterSet::add(std::string name, Tensor value) {
  if (find(name)) throw Error("duplicate parameter '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

std::vector<Tensor> ParameterSet::zero_gradients() const {
  std::vector<Tensor> out;
  out.reserve(values_.size());
  for (const Tensor& v : values_) out.push_back(Tensor::zeros_like(v));
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& v : values_) n += v.size();
  return n;
}

// ---- Layout --------------------------------------------------------------

namespace {

constexpr const char* kGruNames[] = {"W_xr", "W_xz", "W_xh", "R_hr", "R_hz",
                                     "W_hh", "b_r",  "b_z",  "b_h",  "W_ho"};

void add_gru_layout(std::vector<std::pair<std::string, Tensor::Shape>>& out,
                    const std::string& prefix, std::size_t in, std::size_t hidden,
                    std::size_t output) {
  const Tensor::Shape shapes[] = {{hidden, in},     {hidden, in},     {hidden, in},
                                  {hidden, hidden}, {hidden, hidden}, {hidden, hidden},
                                  {hidden},         {hidden},         {hidden},
                                  {output, hidden}};
  for (std::size_t i = 0; i < 10; ++i) out.emplace_back(prefix + kGruNames[i], shapes[i]);
}

GruVars bind_gru(const std::vector<Var>& vars, std::size_t first) {
  GruVars g;
  Var* slots[] = {&g.W_xr, &g.W_xz, &g.W_xh, &g.R_hr, &g.R_hz,
                  &g.W_hh, &g.b_r,  &g.b_z,  &g.b_h,  &g.W_ho};
  for (std::size_t i = 0; i < 10; ++i) *slots[i] = vars[first + i];
  return g;
}

}  // namespace

std::vector<std::pair<std::string, Tensor::Shape>> parameter_layout(const ModelConfig& c) {
  c.validate();
  const std::size_t joint = c.word_output_dim() + c.pos_output_dim();
  std::vector<std::pair<std::string, Tensor::Shape>> out;
  out.emplace_back("embed.word", Tensor::Shape{c.word_dim, c.word_vocab});
  out.emplace_back("embed.pos", Tensor::Shape{c.pos_dim, c.pos_vocab});
  add_gru_layout(out, "rnn_word.", c.word_dim, c.hidden_dim, c.word_output_dim());
  add_gru_layout(out, "rnn_pos.", c.pos_dim, c.hidden_dim, c.pos_output_dim());
  out.emplace_back("concept.W_theta", Tensor::Shape{joint, 1});
  out.emplace_back("concept.b_theta", Tensor::Shape{1});
  out.emplace_back("concept.W", Tensor::Shape{c.num_concepts, joint});
  out.emplace_back("concept.b", Tensor::Shape{c.num_concepts});
  out.emplace_back("transition.W", Tensor::Shape{c.num_transitions, 2 * c.hidden_dim});
  out.emplace_back("transition.b", Tensor::Shape{c.num_transitions});
  return out;
}

// ---- PaddedBatch ---------------------------------------------------------

PaddedBatch PaddedBatch::from(std::span<const EncodedQuery> queries) {
  std::vector<const EncodedQuery*> ptrs;
  for (const EncodedQuery& q : queries) ptrs.push_back(&q);
  return from(std::span<const EncodedQuery* const>(ptrs));
}

PaddedBatch PaddedBatch::from(std::span<const EncodedQuery* const> queries) {
  if (queries.empty()) throw ShapeError("empty batch");
  PaddedBatch b;
  b.batch = queries.size();
  for (const EncodedQuery* q : queries) {
    if (q->word_ids.empty()) throw ShapeError("query has no tokens");
    if (q->word_ids.size() != q->pos_ids.size()) {
      throw ShapeError("query word and POS sequences differ in length");
    }
    b.lengths.push_back(q->length());
    b.max_len = std::max(b.max_len, q->length());
  }
  b.word_ids.assign(b.max_len, std::vector<std::size_t>(b.batch, 0));
  b.pos_ids.assign(b.max_len, std::vector<std::size_t>(b.batch, 0));
  b.mask = Tensor({b.batch, b.max_len});
  for (std::size_t i = 0; i < b.batch; ++i) {
    for (std::size_t k = 0; k < b.lengths[i]; ++k) {
      b.word_ids[k][i] = queries[i]->word_ids[k];
      b.pos_ids[k][i] = queries[i]->pos_ids[k];
      b.mask.at(i, k) = 1.0;
    }
  }
  return b;
}

Tensor PaddedBatch::step_mask(std::size_t k, std::size_t width) const {
  Tensor m({batch, width});
  for (std::size_t i = 0; i < batch; ++i) {
    if (k < lengths[i]) std::fill(m.row(i).begin(), m.row(i).end(), 1.0);
  }
  return m;
}

bool PaddedBatch::fully_dense() const {
  return std::all_of(lengths.begin(), lengths.end(),
                     [this](std::size_t l) { return l == max_len; });
}

// ---- Forward ops ---------------------------------------------------------

Embedded embed_lookup(const BoundModel& model, const PaddedBatch& batch) {
  Embedded e;
  for (std::size_t k = 0; k < batch.max_len; ++k) {
    e.words.push_back(ad::gather_columns(model.embed_word, batch.word_ids[k]));
    e.pos.push_back(ad::gather_columns(model.embed_pos, batch.pos_ids[k]));
  }
  return e;
}

GruStep gru_step(Var x, Var h_prev, const GruVars& w, OutputActivation act,
                 const Tensor* mask) {
  using namespace ad;
  const Var r = sigmoid(add_row_bias(matmul_nt(x, w.W_xr) + matmul_nt(h_prev, w.R_hr), w.b_r));
  const Var z = sigmoid(add_row_bias(matmul_nt(x, w.W_xz) + matmul_nt(h_prev, w.R_hz), w.b_z));
  const Var candidate =
      tanh(add_row_bias(matmul_nt(x, w.W_xh) + matmul_nt(r * h_prev, w.W_hh), w.b_h));
  Var h = z * h_prev + affine(z, -1.0, 1.0) * candidate;
  if (mask) {
    Tape& t = x.tape();
    const Var keep = t.constant(*mask);
    const Var hold = t.constant([&] {
      Tensor inv = *mask;
      for (double& v : inv.data()) v = 1.0 - v;
      return inv;
    }());
    h = keep * h + hold * h_prev;
  }
  Var o = matmul_nt(h, w.W_ho);
  if (act == OutputActivation::kSoftmax) o = softmax(o);
  return {h, o};
}

ChainResult run_chain(std::span<const Var> inputs, const GruVars& w, OutputActivation act,
                      const PaddedBatch* batch) {
  if (inputs.empty()) throw ShapeError("run_chain needs at least one step");
  ad::Tape& tape = inputs.front().tape();
  const std::size_t rows = inputs.front().value().rows();
  const std::size_t hidden = w.R_hr.value().rows();
  const Tensor::Shape h_shape = inputs.front().value().rank() == 2
                                    ? Tensor::Shape{rows, hidden}
                                    : Tensor::Shape{hidden};
  ChainResult out;
  Var h = tape.constant(Tensor(h_shape));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::optional<Tensor> mask;
    if (batch && std::any_of(batch->lengths.begin(), batch->lengths.end(),
                             [k](std::size_t l) { return l <= k; })) {
      mask = batch->step_mask(k, hidden);
    }
    const GruStep step = gru_step(inputs[k], h, w, act, mask ? &*mask : nullptr);
    h = step.hidden;
    out.hidden.push_back(step.hidden);
    out.outputs.push_back(step.output);
  }
  out.last_hidden = h;
  return out;
}

ConceptEncoding concept_encode(std::span<const Var> word_outputs,
                               std::span<const Var> pos_outputs, const EncoderVars& w,
                               const Tensor& mask) {
  using namespace ad;
  if (word_outputs.size() != pos_outputs.size() || word_outputs.empty()) {
    throw ShapeError("concept_encode: word and POS output sequences differ in length");
  }
  if (mask.cols() != word_outputs.size()) {
    throw ShapeError("concept_encode: mask width does not match sequence length");
  }
  std::vector<Var> joint, raw;
  for (std::size_t k = 0; k < word_outputs.size(); ++k) {
    joint.push_back(concat({word_outputs[k], pos_outputs[k]}));
    raw.push_back(relu(add_row_bias(matmul(joint.back(), w.W_theta), w.b_theta)));
  }
  const Var scores = normalize_rows(concat(raw), mask);
  Var pooled = scale_rows(joint[0], slice(scores, 0, 1));
  for (std::size_t k = 1; k < joint.size(); ++k) {
    pooled = pooled + scale_rows(joint[k], slice(scores, k, 1));
  }
  return {scores, sigmoid(add_row_bias(matmul_nt(pooled, w.W_ce), w.b_ce))};
}

Var transition_encode(Var word_last_hidden, Var pos_last_hidden, const EncoderVars& w) {
  using namespace ad;
  const Var joint = concat({word_last_hidden, pos_last_hidden});
  return sigmoid(add_row_bias(matmul_nt(joint, w.W_te), w.b_te));
}

ForwardVars forward(const BoundModel& model, const PaddedBatch& batch) {
  const Embedded e = embed_lookup(model, batch);
  const ChainResult words = run_chain(e.words, model.word_rnn, model.output_activation, &batch);
  const ChainResult pos = run_chain(e.pos, model.pos_rnn, model.output_activation, &batch);
  const ConceptEncoding ce = concept_encode(words.outputs, pos.outputs, model.encoders, batch.mask);
  const Var transitions = transition_encode(words.last_hidden, pos.last_hidden, model.encoders);
  return {ce.concept_probs, transitions, ce.token_scores};
}

// ---- Model ---------------------------------------------------------------

Model Model::initialize(const ModelConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterSet params;
  for (const auto& [name, shape] : parameter_layout(config)) {
    params.add(name, ad::xavier_init(shape, rng));
  }
  return Model(config, std::move(params));
}

Model::Model(ModelConfig config, ParameterSet params)
    : config_(config), params_(std::move(params)) {
  const auto layout = parameter_layout(config_);
  if (layout.size() != params_.size()) {
    throw ShapeError("expected " + std::to_string(layout.size()) + " parameters, got " +
                     std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (params_.name(i) != layout[i].first || params_.value(i).shape() != layout[i].second) {
      throw ShapeError("parameter '" + params_.name(i) + "' " + params_.value(i).shape_string() +
                       " does not match expected '" + layout[i].first + "' " +
                       shape_to_string(layout[i].second));
    }
  }
}

BoundModel Model::bind(ad::Tape& tape, std::vector<Tensor>* grads) const {
  if (grads && grads->size() != params_.size()) {
    throw ShapeError("gradient buffer count does not match parameter count");
  }
  std::vector<Var> vars;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    vars.push_back(grads ? tape.parameter(params_.value(i), (*grads)[i])
                         : tape.constant_ref(params_.value(i)));
  }
  BoundModel m;
  m.embed_word = vars[0];
  m.embed_pos = vars[1];
  m.word_rnn = bind_gru(vars, 2);
  m.pos_rnn = bind_gru(vars, 12);
  m.encoders = {vars[22], vars[23], vars[24], vars[25], vars[26], vars[27]};
  m.output_activation = config_.output_activation;
  return m;
}

void Model::check_query(const EncodedQuery& q) const {
  if (q.word_ids.empty() || q.word_ids.size() != q.pos_ids.size()) {
    throw ShapeError("query token and POS sequences are empty or misaligned");
  }
  for (std::size_t id : q.word_ids)
    if (id >= config_.word_vocab) throw LookupError("word id outside model vocabulary");
  for (std::size_t id : q.pos_ids)
    if (id >= config_.pos_vocab) throw LookupError("POS id outside model vocabulary");
  if (q.concept_labels.size() != config_.num_concepts ||
      q.transition_labels.size() != config_.num_transitions) {
    throw ShapeError("query labels do not match model label sizes");
  }
}

Prediction Model::predict(const EncodedQuery& query) const {
  return predict_batch(std::span<const EncodedQuery>(&query, 1)).front();
}

std::vector<Prediction> Model::predict_batch(std::span<const EncodedQuery> queries) const {
  if (queries.empty()) return {};
  for (const EncodedQuery& q : queries) check_query(q);
  ad::Tape tape;
  const BoundModel bound = bind(tape);
  const PaddedBatch batch = PaddedBatch::from(queries);
  const ForwardVars out = forward(bound, batch);
  std::vector<Prediction> preds(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto c = out.concept_probs.value().row(i);
    const auto t = out.transition_probs.value().row(i);
    const auto s = out.token_scores.value().row(i).first(batch.lengths[i]);
    preds[i].concept_probs.assign(c.begin(), c.end());
    preds[i].transition_probs.assign(t.begin(), t.end());
    preds[i].token_scores.assign(s.begin(), s.end());
  }
  return preds;
}

}  // namespace intentgraph
