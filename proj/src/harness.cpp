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

#include "intentgraph/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "intentgraph/autodiff.hpp"
#include "intentgraph/error.hpp"
#include "intentgraph/optim.hpp"
#include "intentgraph/util.hpp"

namespace intentgraph {

namespace {

using Clock = std::chrono::steady_clock;
using QueryPtrs = std::vector<const EncodedQuery*>;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ParseError("bad value '" + std::string(value) + "' for '" + std::string(key) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string v = to_lower(value);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ParseError("bad boolean '" + std::string(value) + "' for '" + std::string(key) + "'");
}

QueryPtrs pointers(std::span<const EncodedQuery> queries) {
  QueryPtrs out;
  out.reserve(queries.size());
  for (const EncodedQuery& q : queries) out.push_back(&q);
  return out;
}

// Seeded shuffle, then length-sorted pools of eight batches, then a shuffle
// of the resulting batches.
std::vector<QueryPtrs> make_batches(std::span<const EncodedQuery> train, std::size_t batch_size,
                                    std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(epoch), std::uint64_t{0x6261746368}};
  std::mt19937_64 rng(seq);
  QueryPtrs order = pointers(train);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t pool = batch_size * 8;
  std::vector<QueryPtrs> batches;
  for (std::size_t start = 0; start < order.size(); start += pool) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + pool));
    std::stable_sort(first, last, [](const EncodedQuery* a, const EncodedQuery* b) {
      return a->length() < b->length();
    });
    for (auto it = first; it < last; it += static_cast<std::ptrdiff_t>(
                                         std::min<std::size_t>(batch_size, last - it))) {
      batches.emplace_back(it, it + static_cast<std::ptrdiff_t>(
                                        std::min<std::size_t>(batch_size, last - it)));
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

using LossFn = std::function<ad::Var(ad::Tape&, std::vector<Tensor>*,
                                     std::span<const EncodedQuery* const>)>;
using ScoreFn = std::function<double()>;

// Accumulates the batch gradient into `grads` and returns the batch loss.
double batch_gradient(const LossFn& loss_fn, const ParameterSet& params, const QueryPtrs& batch,
                      std::size_t workers, std::vector<Tensor>& grads) {
  workers = std::min(workers, batch.size());
  if (workers <= 1) {
    ad::Tape tape;
    const ad::Var loss = loss_fn(tape, &grads, batch);
    tape.backward(loss);
    return loss.value()[0];
  }
  std::vector<std::vector<Tensor>> shard_grads(workers);
  std::vector<double> shard_loss(workers, 0.0);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  const double total = static_cast<double>(batch.size());
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        const std::size_t begin = batch.size() * w / workers;
        const std::size_t end = batch.size() * (w + 1) / workers;
        const std::span<const EncodedQuery* const> shard(batch.data() + begin, end - begin);
        shard_grads[w] = params.zero_gradients();
        ad::Tape tape;
        const ad::Var loss = ad::scale(loss_fn(tape, &shard_grads[w], shard),
                                       static_cast<double>(end - begin) / total);
        tape.backward(loss);
        shard_loss[w] = loss.value()[0];
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  double loss = 0.0;
  for (std::size_t w = 0; w < workers; ++w) {
    loss += shard_loss[w];
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i].add(shard_grads[w][i]);
  }
  return loss;
}

FitResult fit(const TrainConfig& config, ParameterSet& params, const LossFn& loss_fn,
              const ScoreFn& score_fn, std::span<const EncodedQuery> train,
              const EpochCallback& on_epoch) {
  if (train.empty()) throw Error("training split is empty");
  ad::AdamOptions options;
  options.lr = config.lr;
  ad::AdamState state = ad::AdamState::zeros_for(params.values(), options);
  FitResult result;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const std::size_t workers = config.effective_workers();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = Clock::now();
    double loss_sum = 0.0;
    const auto batches = make_batches(train, config.batch_size, config.seed, epoch);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<Tensor> grads = params.zero_gradients();
      double loss = 0.0;
      try {
        loss = batch_gradient(loss_fn, params, batches[b], workers, grads);
      } catch (const NumericError& e) {
        throw NumericError("non-finite value in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + " of " + std::to_string(batches.size()) +
                           ": " + e.what());
      }
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1));
      }
      loss_sum += loss * static_cast<double>(batches[b].size());
      const double norm = ad::clip_by_global_norm(grads, config.clip_norm);
      if (norm == 0.0) continue;
      ad::adam_step(params.values(), grads, state);
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train.size());
    record.validation_score = score_fn();
    record.seconds = seconds_since(start);
    result.epochs.push_back(record);
    if (record.validation_score > best_score) {
      best_score = record.validation_score;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch) on_epoch(record);
    if (config.patience > 0 && since_best >= config.patience) break;
  }
  if (result.best_epoch == 0) {
    result.params = params;
    result.best_epoch = result.epochs.size();
  }
  return result;
}

double micro_auc_or_nan(const EvalBatch& batch) {
  try {
    return roc_and_auc(batch.truths, batch.scores).auc;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::optional<MetricSummary> try_summarize(const EvalBatch& batch) {
  if (batch.rows == 0) return std::nullopt;
  try {
    return summarize(batch);
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::size_t count_ones(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

std::vector<std::size_t> iota_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

void fill_report_header(RunReport& report, const TrainConfig& config, const PreparedData& data,
                        const FitResult& fit) {
  report.seed = config.seed;
  report.split_hash = data.split.fingerprint();
  report.epochs = fit.epochs;
  report.best_epoch = fit.best_epoch;
}

}  // namespace

// ---- TrainConfig ---------------------------------------------------------

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (epochs < 1) throw Error("epochs must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("lr must be positive");
  if (!(clip_norm > 0.0)) throw Error("clip_norm must be positive");
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  if (energy_weight < 0.0) throw Error("energy_weight must be non-negative");
  if (word_dim == 0 || pos_dim == 0 || hidden_dim == 0) throw Error("model dims must be positive");
}

std::size_t TrainConfig::effective_workers() const {
  return deterministic ? 1 : std::max<std::size_t>(1, workers);
}

LossConfig TrainConfig::loss_config() const {
  LossConfig c;
  c.variant = variant;
  c.energy_weight = energy_weight;
  c.temperature = temperature;
  return c;
}

ModelConfig TrainConfig::model_config(const ConceptGraph& graph, const Vocabulary& vocab) const {
  ModelConfig c;
  c.word_dim = word_dim;
  c.pos_dim = pos_dim;
  c.hidden_dim = hidden_dim;
  c.num_concepts = graph.num_concepts();
  c.num_transitions = graph.num_transitions();
  c.word_vocab = vocab.word_size();
  c.pos_vocab = vocab.pos_size();
  c.output_activation = output_activation;
  c.validate();
  return c;
}

void apply_setting(TrainConfig& c, std::string_view raw_key, std::string_view raw_value) {
  std::string key(trim(raw_key));
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string_view value = trim(raw_value);
  if (key == "variant") c.variant = parse_variant(value);
  else if (key == "epochs") c.epochs = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "lr") c.lr = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "patience") c.patience = parse_number<std::size_t>(key, value);
  else if (key == "clip_norm") c.clip_norm = parse_number<double>(key, value);
  else if (key == "energy_weight") c.energy_weight = parse_number<double>(key, value);
  else if (key == "temperature") c.temperature = parse_number<double>(key, value);
  else if (key == "word_dim") c.word_dim = parse_number<std::size_t>(key, value);
  else if (key == "pos_dim") c.pos_dim = parse_number<std::size_t>(key, value);
  else if (key == "hidden_dim") c.hidden_dim = parse_number<std::size_t>(key, value);
  else if (key == "output_activation") c.output_activation = parse_output_activation(value);
  else if (key == "workers") c.workers = parse_number<std::size_t>(key, value);
  else if (key == "deterministic") c.deterministic = parse_bool(key, value);
  else if (key == "graph") c.graph_path = std::string(value);
  else if (key == "data" || key == "dataset") c.dataset_path = std::string(value);
  else if (key == "checkpoint") c.checkpoint_out = std::string(value);
  else if (key == "out") c.report_out = std::string(value);
  else throw ParseError("unknown setting '" + std::string(raw_key) + "'");
}

void apply_config_text(TrainConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_setting(config, body.substr(0, eq), body.substr(eq + 1));
    } catch (const Error& e) {
      throw ParseError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

// ---- Data ----------------------------------------------------------------

PreparedData prepare_split(const ConceptGraph& graph, std::span<const RawQuery> records,
                           std::uint64_t seed) {
  PreparedData d;
  d.split = split_indices(records.size(), seed);
  std::vector<RawQuery> train_records;
  for (std::size_t i : d.split.train) train_records.push_back(records[i]);
  d.vocab = Vocabulary::build(train_records);
  auto encode_ids = [&](const std::vector<std::size_t>& ids) {
    std::vector<EncodedQuery> out;
    out.reserve(ids.size());
    for (std::size_t i : ids) out.push_back(encode(records[i], d.vocab, graph));
    return out;
  };
  d.train = encode_ids(d.split.train);
  d.validation = encode_ids(d.split.validation);
  d.test = encode_ids(d.split.test);
  return d;
}

// ---- Predictions ---------------------------------------------------------

void PredictionSet::append(const PredictionSet& other) {
  ids.insert(ids.end(), other.ids.begin(), other.ids.end());
  auto merge = [](EvalBatch& into, const EvalBatch& from) {
    if (from.rows == 0) return;
    if (into.rows == 0) into.cols = from.cols;
    if (into.cols != from.cols) throw ShapeError("cannot pool predictions of different widths");
    into.truths.insert(into.truths.end(), from.truths.begin(), from.truths.end());
    into.scores.insert(into.scores.end(), from.scores.begin(), from.scores.end());
    into.rows += from.rows;
  };
  merge(concepts, other.concepts);
  merge(transitions, other.transitions);
  energies.insert(energies.end(), other.energies.begin(), other.energies.end());
}

std::string PredictionSet::to_jsonl(const ConceptGraph& graph) const {
  std::string out;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    nlohmann::ordered_json j;
    j["id"] = ids[r];
    if (concepts.rows > 0) {
      std::vector<std::string> truth;
      const auto t = concepts.truth_row(r);
      for (std::size_t m = 0; m < t.size(); ++m)
        if (t[m]) truth.push_back(graph.concepts()[m].name);
      const auto s = concepts.score_row(r);
      j["concepts"] = truth;
      j["concept_scores"] = std::vector<double>(s.begin(), s.end());
    }
    if (transitions.rows > 0) {
      std::vector<std::string> truth;
      const auto t = transitions.truth_row(r);
      for (std::size_t n = 0; n < t.size(); ++n)
        if (t[n]) truth.push_back(graph.transition_name(n));
      const auto s = transitions.score_row(r);
      j["transitions"] = truth;
      j["transition_scores"] = std::vector<double>(s.begin(), s.end());
    }
    if (!energies.empty()) j["energy"] = energies[r];
    out += j.dump();
    out += '\n';
  }
  return out;
}

PredictionSet predict_all(const Model& model, std::span<const EncodedQuery> queries,
                          std::span<const std::size_t> ids, const TransferMatrix& a) {
  if (ids.size() != queries.size()) throw ShapeError("prediction ids do not match queries");
  const ModelConfig& cfg = model.config();
  PredictionSet out;
  out.ids.assign(ids.begin(), ids.end());
  std::vector<Prediction> preds(queries.size());
  std::vector<std::size_t> order = iota_ids(queries.size());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return queries[x].length() < queries[y].length();
  });
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < order.size(); start += kChunk) {
    std::vector<EncodedQuery> chunk;
    const std::size_t end = std::min(order.size(), start + kChunk);
    for (std::size_t i = start; i < end; ++i) chunk.push_back(queries[order[i]]);
    auto got = model.predict_batch(chunk);
    for (std::size_t i = start; i < end; ++i) preds[order[i]] = std::move(got[i - start]);
  }
  out.concepts = EvalBatch(0, cfg.num_concepts);
  out.transitions = EvalBatch(0, cfg.num_transitions);
  for (std::size_t r = 0; r < queries.size(); ++r) {
    const EncodedQuery& q = queries[r];
    out.concepts.append(q.concept_labels, preds[r].concept_probs);
    out.transitions.append(q.transition_labels, preds[r].transition_probs);
    out.energies.push_back(energy_count(preds[r].concept_probs, preds[r].transition_probs, a,
                                        count_ones(q.concept_labels),
                                        count_ones(q.transition_labels)));
  }
  return out;
}

// ---- Reports -------------------------------------------------------------

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double RunReport::headline_micro_auc() const {
  const bool use_concepts = variant == to_string(Variant::kCI);
  const auto& m = use_concepts ? concepts : transitions;
  return m ? m->micro_auc : std::numeric_limits<double>::quiet_NaN();
}

std::string RunReport::epochs_csv() const {
  std::string out = "epoch,train_loss,validation_micro_auc\n";
  for (const EpochRecord& e : epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.validation_score) + "\n";
  }
  return out;
}

std::string RunReport::summary_csv() const {
  std::string out = "metric,value\n";
  auto row = [&](std::string_view name, const std::string& value) {
    out += std::string(name) + "," + value + "\n";
  };
  row("variant", csv_field(variant));
  row("seed", std::to_string(seed));
  row("split_hash", hex64(split_hash));
  row("test_queries", std::to_string(test_queries));
  row("epochs_run", std::to_string(epochs.size()));
  row("best_epoch", std::to_string(best_epoch));
  auto metrics = [&](std::string_view prefix, const std::optional<MetricSummary>& m) {
    if (!m) return;
    const std::string p(prefix);
    row(p + "_micro_auc", format_double(m->micro_auc));
    row(p + "_macro_auc", format_double(m->macro_auc));
    row(p + "_coverage_error", format_double(m->coverage_error));
    row(p + "_lrap", format_double(m->lrap));
    row(p + "_skipped_labels", std::to_string(m->skipped_labels));
  };
  metrics("transition", transitions);
  metrics("concept", concepts);
  if (mean_energy) row("mean_energy", format_double(*mean_energy));
  if (wall_seconds) row("wall_seconds", format_double(*wall_seconds));
  return out;
}

std::string RunReport::per_label_csv(bool concepts_table) const {
  const auto& m = concepts_table ? concepts : transitions;
  const auto& names = concepts_table ? concept_names : transition_names;
  std::string out = concepts_table ? "concept,auc\n" : "transition,auc\n";
  if (!m) return out;
  for (std::size_t i = 0; i < names.size() && i < m->per_label_auc.size(); ++i) {
    out += csv_field(names[i]) + "," +
           (m->per_label_auc[i] ? format_double(*m->per_label_auc[i]) : std::string()) + "\n";
  }
  return out;
}

RunReport score_predictions(const PredictionSet& predictions, const ConceptGraph& graph) {
  RunReport r;
  r.test_queries = predictions.ids.size();
  r.transitions = try_summarize(predictions.transitions);
  r.concepts = try_summarize(predictions.concepts);
  if (!predictions.energies.empty()) {
    double total = 0.0;
    for (double e : predictions.energies) total += e;
    r.mean_energy = total / static_cast<double>(predictions.energies.size());
  }
  for (const Concept& c : graph.concepts()) r.concept_names.push_back(c.name);
  for (std::size_t n = 0; n < graph.num_transitions(); ++n)
    r.transition_names.push_back(graph.transition_name(n));
  return r;
}

std::string roc_csv(const PredictionSet& predictions, const ConceptGraph& graph) {
  std::string out = "kind,label,fpr,tpr,threshold\n";
  auto emit = [&](const std::string& kind, const std::string& label, const RocResult& roc) {
    for (const RocPoint& p : roc.curve) {
      out += kind + "," + csv_field(label) + "," + format_double(p.fpr) + "," +
             format_double(p.tpr) + "," + format_double(p.threshold) + "\n";
    }
  };
  auto block = [&](const std::string& kind, const EvalBatch& batch, auto&& name_of) {
    if (batch.rows == 0) return;
    try {
      emit(kind + "_micro", "all", roc_and_auc(batch.truths, batch.scores));
    } catch (const Error&) {
    }
    std::vector<std::uint8_t> truth(batch.rows);
    std::vector<double> score(batch.rows);
    for (std::size_t l = 0; l < batch.cols; ++l) {
      for (std::size_t r = 0; r < batch.rows; ++r) {
        truth[r] = batch.truths[r * batch.cols + l];
        score[r] = batch.scores[r * batch.cols + l];
      }
      const std::size_t pos = count_ones(truth);
      if (pos == 0 || pos == truth.size()) continue;
      emit(kind, name_of(l), roc_and_auc(truth, score));
    }
  };
  block("transition", predictions.transitions,
        [&](std::size_t n) { return graph.transition_name(n); });
  block("concept", predictions.concepts, [&](std::size_t m) { return graph.concepts()[m].name; });
  return out;
}

void write_run_outputs(const std::filesystem::path& dir, const RunReport& report,
                       const PredictionSet& predictions, const ConceptGraph& graph) {
  write_file(dir / "summary.csv", report.summary_csv());
  write_file(dir / "epochs.csv", report.epochs_csv());
  write_file(dir / "per_transition_auc.csv", report.per_label_csv(false));
  write_file(dir / "per_concept_auc.csv", report.per_label_csv(true));
  write_file(dir / "predictions.jsonl", predictions.to_jsonl(graph));
  write_file(dir / "roc.csv", roc_csv(predictions, graph));
}

// ---- Training ------------------------------------------------------------

TrainOutcome train(const TrainConfig& config, const ConceptGraph& graph,
                   std::span<const RawQuery> records, const EpochCallback& on_epoch) {
  config.validate();
  return train(config, graph, prepare_split(graph, records, config.seed), on_epoch);
}

TrainOutcome train(const TrainConfig& config, const ConceptGraph& graph,
                   const PreparedData& data, const EpochCallback& on_epoch) {
  config.validate();
  const auto start = Clock::now();
  const ModelConfig mc = config.model_config(graph, data.vocab);
  const TransferMatrix a = build_transfer_matrix(graph);
  const LossConfig lc = config.loss_config();
  Model model = Model::initialize(mc, config.seed);
  for (const auto* split : {&data.train, &data.validation, &data.test})
    for (const EncodedQuery& q : *split) model.check_query(q);

  const LossFn loss_fn = [&](ad::Tape& tape, std::vector<Tensor>* grads,
                             std::span<const EncodedQuery* const> batch) {
    const BoundModel bound = model.bind(tape, grads);
    const ForwardVars out = forward(bound, PaddedBatch::from(batch));
    return loss_for_variant(lc, out, BatchLabels::from(batch), a);
  };
  const std::vector<std::size_t> val_ids = iota_ids(data.validation.size());
  const ScoreFn score_fn = [&] {
    if (data.validation.empty()) return std::numeric_limits<double>::quiet_NaN();
    const PredictionSet p = predict_all(model, data.validation, val_ids, a);
    return micro_auc_or_nan(config.variant == Variant::kCI ? p.concepts : p.transitions);
  };
  FitResult result = fit(config, model.parameters(), loss_fn, score_fn, data.train, on_epoch);

  Model best(mc, std::move(result.params));
  TrainOutcome out;
  out.test_predictions = predict_all(best, data.test, data.split.test, a);
  out.report = score_predictions(out.test_predictions, graph);
  out.report.variant = to_string(config.variant);
  fill_report_header(out.report, config, data, result);
  if (!config.deterministic) out.report.wall_seconds = seconds_since(start);
  out.checkpoint = make_checkpoint(best, data.vocab, graph, to_string(config.variant), config.seed);
  return out;
}

Evaluation evaluate(const Checkpoint& checkpoint, const ConceptGraph& graph,
                    std::span<const RawQuery> records, const Vocabulary& vocab) {
  verify_manifest(checkpoint, graph, vocab);
  const std::vector<EncodedQuery> queries = encode_all(records, vocab, graph);
  const Model model = checkpoint.model();
  Evaluation out;
  out.predictions =
      predict_all(model, queries, iota_ids(queries.size()), build_transfer_matrix(graph));
  out.report = score_predictions(out.predictions, graph);
  out.report.variant = checkpoint.manifest.variant;
  out.report.seed = checkpoint.manifest.seed;
  return out;
}

// ---- Cross-validation ----------------------------------------------------

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error("cross-validation needs at least 2 folds");
  if (n < folds) throw Error("dataset has fewer records than folds");
  std::vector<std::size_t> perm = iota_ids(n);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % folds;
  return fold;
}

CrossValidation cross_validate(const TrainConfig& config, const ConceptGraph& graph,
                               std::span<const RawQuery> records, std::size_t folds,
                               const EpochCallback& on_epoch) {
  config.validate();
  const std::vector<std::size_t> fold = fold_assignment(records.size(), folds, config.seed);
  Fnv1a hash;
  hash.update(std::uint64_t{folds});
  for (std::size_t f : fold) hash.update(std::uint64_t{f});
  CrossValidation cv;
  for (std::size_t f = 0; f < folds; ++f) {
    PreparedData d;
    d.split.seed = config.seed;
    std::size_t rest = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (fold[i] == f) {
        d.split.test.push_back(i);
      } else {
        (rest++ % 8 == 7 ? d.split.validation : d.split.train).push_back(i);
      }
    }
    std::vector<RawQuery> train_records;
    for (std::size_t i : d.split.train) train_records.push_back(records[i]);
    d.vocab = Vocabulary::build(train_records);
    for (std::size_t i : d.split.train) d.train.push_back(encode(records[i], d.vocab, graph));
    for (std::size_t i : d.split.validation)
      d.validation.push_back(encode(records[i], d.vocab, graph));
    for (std::size_t i : d.split.test) d.test.push_back(encode(records[i], d.vocab, graph));
    TrainOutcome run = train(config, graph, d, on_epoch);
    cv.predictions.append(run.test_predictions);
    cv.folds.push_back(std::move(run.report));
  }
  cv.pooled = score_predictions(cv.predictions, graph);
  cv.pooled.variant = to_string(config.variant);
  cv.pooled.seed = config.seed;
  cv.pooled.split_hash = hash.digest();
  return cv;
}

// ---- Logistic regression baseline ----------------------------------------

LogisticBaseline LogisticBaseline::initialize(std::size_t num_transitions,
                                              std::size_t word_vocab, std::size_t pos_vocab,
                                              std::uint64_t seed) {
  LogisticBaseline b;
  b.word_vocab = word_vocab;
  b.pos_vocab = pos_vocab;
  b.params.add("lr.W", ad::xavier_init({num_transitions, word_vocab + pos_vocab}, seed));
  b.params.add("lr.b", Tensor({num_transitions}, 0.0));
  return b;
}

Tensor LogisticBaseline::features(std::span<const EncodedQuery* const> queries) const {
  Tensor x({queries.size(), num_features()}, 0.0);
  for (std::size_t r = 0; r < queries.size(); ++r) {
    auto row = x.row(r);
    for (std::size_t id : queries[r]->word_ids) {
      if (id >= word_vocab) throw LookupError("word id outside baseline vocabulary");
      row[id] += 1.0;
    }
    for (std::size_t id : queries[r]->pos_ids) {
      if (id >= pos_vocab) throw LookupError("POS id outside baseline vocabulary");
      row[word_vocab + id] += 1.0;
    }
  }
  return x;
}

namespace {

ad::Var baseline_probs(const LogisticBaseline& model, ad::Tape& tape, std::vector<Tensor>* grads,
                       std::span<const EncodedQuery* const> queries) {
  auto bind = [&](std::size_t i) {
    return grads ? tape.parameter(model.params.value(i), (*grads)[i])
                 : tape.constant_ref(model.params.value(i));
  };
  const ad::Var w = bind(0);
  const ad::Var b = bind(1);
  const ad::Var x = tape.constant(model.features(queries));
  return ad::sigmoid(ad::add_row_bias(ad::matmul_nt(x, w), b));
}

PredictionSet baseline_prediction_set(const LogisticBaseline& model,
                                      std::span<const EncodedQuery> queries,
                                      std::span<const std::size_t> ids) {
  PredictionSet out;
  out.ids.assign(ids.begin(), ids.end());
  const std::size_t n = model.params.value(1).shape()[0];
  out.transitions = EvalBatch(0, n);
  const auto probs = model.predict(queries);
  for (std::size_t r = 0; r < queries.size(); ++r)
    out.transitions.append(queries[r].transition_labels, probs[r]);
  return out;
}

}  // namespace

std::vector<std::vector<double>> LogisticBaseline::predict(
    std::span<const EncodedQuery> queries) const {
  std::vector<std::vector<double>> out;
  if (queries.empty()) return out;
  const QueryPtrs ptrs = pointers(queries);
  ad::Tape tape;
  const ad::Var probs = baseline_probs(*this, tape, nullptr, ptrs);
  for (std::size_t r = 0; r < queries.size(); ++r) {
    const auto row = probs.value().row(r);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

BaselineOutcome lr_baseline(const TrainConfig& config, const ConceptGraph& graph,
                            const PreparedData& data, const EpochCallback& on_epoch) {
  config.validate();
  const auto start = Clock::now();
  LogisticBaseline model = LogisticBaseline::initialize(
      graph.num_transitions(), data.vocab.word_size(), data.vocab.pos_size(), config.seed);
  const LossFn loss_fn = [&](ad::Tape& tape, std::vector<Tensor>* grads,
                             std::span<const EncodedQuery* const> batch) {
    const ad::Var probs = baseline_probs(model, tape, grads, batch);
    const BatchLabels labels = BatchLabels::from(batch);
    return ad::scale(cross_entropy(probs, labels.transitions),
                     1.0 / static_cast<double>(batch.size()));
  };
  const std::vector<std::size_t> val_ids = iota_ids(data.validation.size());
  const ScoreFn score_fn = [&] {
    if (data.validation.empty()) return std::numeric_limits<double>::quiet_NaN();
    return micro_auc_or_nan(baseline_prediction_set(model, data.validation, val_ids).transitions);
  };
  FitResult result = fit(config, model.params, loss_fn, score_fn, data.train, on_epoch);
  model.params = std::move(result.params);

  BaselineOutcome out;
  out.test_predictions = baseline_prediction_set(model, data.test, data.split.test);
  out.report = score_predictions(out.test_predictions, graph);
  out.report.variant = "LR";
  fill_report_header(out.report, config, data, result);
  if (!config.deterministic) out.report.wall_seconds = seconds_since(start);
  out.model = std::move(model);
  return out;
}

// ---- Comparison ----------------------------------------------------------

Comparison compare_variants(const TrainConfig& config, const ConceptGraph& graph,
                            std::span<const RawQuery> records,
                            std::span<const std::string> variants,
                            const EpochCallback& on_epoch) {
  config.validate();
  if (variants.empty()) throw Error("no variants to compare");
  std::vector<std::optional<Variant>> parsed;
  for (const std::string& v : variants) {
    if (to_lower(v) == "lr") parsed.push_back(std::nullopt);
    else parsed.push_back(parse_variant(v));
  }
  const PreparedData data = prepare_split(graph, records, config.seed);
  Comparison out;
  for (const auto& v : parsed) {
    if (!v) {
      out.reports.push_back(lr_baseline(config, graph, data, on_epoch).report);
      continue;
    }
    TrainConfig c = config;
    c.variant = *v;
    out.reports.push_back(train(c, graph, data, on_epoch).report);
  }
  return out;
}

std::string Comparison::summary_csv() const {
  std::string out =
      "variant,target,seed,split_hash,micro_auc,macro_auc,coverage_error,lrap,energy,best_epoch\n";
  for (const RunReport& r : reports) {
    const bool concepts = r.variant == to_string(Variant::kCI);
    const auto& m = concepts ? r.concepts : r.transitions;
    auto metric = [&](double MetricSummary::*field) {
      return m ? format_double((*m).*field) : std::string();
    };
    out += csv_field(r.variant) + "," + (concepts ? "concepts" : "transitions") + "," +
           std::to_string(r.seed) + "," + hex64(r.split_hash) + "," +
           metric(&MetricSummary::micro_auc) + "," + metric(&MetricSummary::macro_auc) + "," +
           metric(&MetricSummary::coverage_error) + "," + metric(&MetricSummary::lrap) + "," +
           (r.mean_energy ? format_double(*r.mean_energy) : std::string()) + "," +
           std::to_string(r.best_epoch) + "\n";
  }
  return out;
}

std::string Comparison::per_transition_csv() const {
  std::vector<const RunReport*> cols;
  for (const RunReport& r : reports)
    if (r.variant != to_string(Variant::kCI) && r.transitions) cols.push_back(&r);
  std::string out = "transition";
  for (const RunReport* r : cols) out += "," + csv_field(r->variant);
  out += "\n";
  if (cols.empty()) return out;
  const auto& names = cols.front()->transition_names;
  for (std::size_t n = 0; n < names.size(); ++n) {
    out += csv_field(names[n]);
    for (const RunReport* r : cols) {
      const auto& auc = r->transitions->per_label_auc;
      out += ",";
      if (n < auc.size() && auc[n]) out += format_double(*auc[n]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace intentgraph
