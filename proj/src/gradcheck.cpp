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

#include "intentgraph/gradcheck.hpp"

#include <algorithm>
#include <random>

#include "intentgraph/autodiff.hpp"
#include "intentgraph/error.hpp"

namespace intentgraph {

namespace {

double batch_loss(const Model& model, std::span<const EncodedQuery* const> ptrs,
                  const LossConfig& loss, const TransferMatrix& a,
                  std::vector<Tensor>* grads) {
  ad::Tape tape;
  const BoundModel bound = model.bind(tape, grads);
  const ForwardVars out = forward(bound, PaddedBatch::from(ptrs));
  const ad::Var value = loss_for_variant(loss, out, BatchLabels::from(ptrs), a);
  if (grads) tape.backward(value);
  return value.value()[0];
}

void random_labels(std::vector<std::uint8_t>& labels, std::size_t width, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.4);
  labels.assign(width, 0);
  for (auto& l : labels) l = coin(rng) ? 1 : 0;
  if (width < 2) return;
  std::uniform_int_distribution<std::size_t> pick(0, width - 1);
  if (std::count(labels.begin(), labels.end(), 1) == 0) labels[pick(rng)] = 1;
  if (std::count(labels.begin(), labels.end(), 0) == 0) labels[pick(rng)] = 0;
}

}  // namespace

GradcheckReport gradient_check(const Model& model, std::span<const EncodedQuery> batch,
                               const LossConfig& loss, const TransferMatrix& a, double step) {
  std::vector<const EncodedQuery*> ptrs;
  for (const EncodedQuery& q : batch) {
    model.check_query(q);
    ptrs.push_back(&q);
  }
  GradcheckReport report;
  std::vector<Tensor> grads = model.parameters().zero_gradients();
  report.loss = batch_loss(model, ptrs, loss, a, &grads);
  Model probe = model;
  for (std::size_t i = 0; i < probe.parameters().size(); ++i) {
    auto f = [&](const Tensor& x) {
      const Tensor saved = probe.parameters().value(i);
      probe.parameters().value(i) = x;
      const double v = batch_loss(probe, ptrs, loss, a, nullptr);
      probe.parameters().value(i) = saved;
      return v;
    };
    const Tensor numeric = ad::numeric_gradient(f, probe.parameters().value(i), step);
    GradcheckEntry entry;
    entry.name = probe.parameters().name(i);
    entry.size = numeric.size();
    entry.max_relative_error = ad::max_relative_error(grads[i], numeric);
    report.max_relative_error = std::max(report.max_relative_error, entry.max_relative_error);
    report.parameters.push_back(entry);
  }
  return report;
}

std::vector<EncodedQuery> random_queries(const ModelConfig& config, std::size_t count,
                                         std::size_t min_len, std::size_t max_len,
                                         std::uint64_t seed) {
  if (min_len == 0 || min_len > max_len) throw Error("random_queries: bad length range");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> word(0, config.word_vocab - 1);
  std::uniform_int_distribution<std::size_t> pos(0, config.pos_vocab - 1);
  std::vector<EncodedQuery> out(count);
  for (EncodedQuery& q : out) {
    const std::size_t k = len(rng);
    for (std::size_t i = 0; i < k; ++i) {
      q.word_ids.push_back(word(rng));
      q.pos_ids.push_back(pos(rng));
    }
    random_labels(q.concept_labels, config.num_concepts, rng);
    random_labels(q.transition_labels, config.num_transitions, rng);
  }
  return out;
}

ConceptGraph random_ring_graph(std::size_t num_concepts, std::size_t num_transitions) {
  if (num_concepts < 2 || num_transitions > num_concepts * (num_concepts - 1)) {
    throw Error("random_ring_graph: unsupported size");
  }
  std::vector<std::string> names;
  for (std::size_t m = 0; m < num_concepts; ++m) names.push_back("c" + std::to_string(m));
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t hop = 1; hop < num_concepts && edges.size() < num_transitions; ++hop) {
    for (std::size_t m = 0; m < num_concepts && edges.size() < num_transitions; ++m) {
      edges.emplace_back(m, (m + hop) % num_concepts);
    }
  }
  return ConceptGraph(names, edges);
}

}  // namespace intentgraph
