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

#ifndef INTENTGRAPH_HARNESS_HPP_
#define INTENTGRAPH_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intentgraph/checkpoint.hpp"
#include "intentgraph/concept_graph.hpp"
#include "intentgraph/corpus.hpp"
#include "intentgraph/losses.hpp"
#include "intentgraph/metrics.hpp"
#include "intentgraph/model.hpp"

namespace intentgraph {

struct TrainConfig {
  Variant variant = Variant::kCoCTIMTL;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  std::uint64_t seed = 1;
  // Epochs without a validation improvement before stopping; 0 disables.
  std::size_t patience = 10;
  double clip_norm = 5.0;
  double energy_weight = 1.0;
  double temperature = 10.0;

  std::size_t word_dim = 100;
  std::size_t pos_dim = 20;
  std::size_t hidden_dim = 100;
  OutputActivation output_activation = OutputActivation::kSoftmax;

  std::size_t workers = 1;
  bool deterministic = false;

  std::filesystem::path graph_path;
  std::filesystem::path dataset_path;
  std::filesystem::path checkpoint_out;
  std::filesystem::path report_out;

  // Throws Error on out-of-range settings.
  void validate() const;
  std::size_t effective_workers() const;
  LossConfig loss_config() const;
  ModelConfig model_config(const ConceptGraph& graph, const Vocabulary& vocab) const;
};

// Applies one key=value setting; keys are the long flag names with dashes
// or underscores ("batch-size", "batch_size"). Throws ParseError.
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);
// Flat key=value lines, '#' comments and blank lines allowed.
void apply_config_text(TrainConfig& config, std::string_view text);

// Vocabulary built from the training part of a seeded 70/10/20 split.
struct PreparedData {
  Vocabulary vocab;
  SplitIndices split;
  std::vector<EncodedQuery> train;
  std::vector<EncodedQuery> validation;
  std::vector<EncodedQuery> test;
};

PreparedData prepare_split(const ConceptGraph& graph, std::span<const RawQuery> records,
                           std::uint64_t seed);

// Scores for a set of queries; row r belongs to record ids[r].
struct PredictionSet {
  std::vector<std::size_t> ids;
  EvalBatch concepts;  // empty for models without a concept head
  EvalBatch transitions;
  std::vector<double> energies;  // counting energy per row, if concepts exist

  void append(const PredictionSet& other);
  std::string to_jsonl(const ConceptGraph& graph) const;
};

PredictionSet predict_all(const Model& model, std::span<const EncodedQuery> queries,
                          std::span<const std::size_t> ids, const TransferMatrix& a);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_score = 0.0;  // micro-AUC of the monitored head; NaN if undefined
  double seconds = 0.0;
};

struct RunReport {
  std::string variant;
  std::uint64_t seed = 0;
  std::uint64_t split_hash = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t test_queries = 0;
  std::optional<MetricSummary> transitions;
  std::optional<MetricSummary> concepts;
  std::optional<double> mean_energy;
  std::vector<std::string> transition_names;
  std::vector<std::string> concept_names;
  std::optional<double> wall_seconds;

  // epoch,train_loss,validation_micro_auc
  std::string epochs_csv() const;
  // metric,value rows
  std::string summary_csv() const;
  // label,auc rows for transitions (or concepts)
  std::string per_label_csv(bool concepts_table = false) const;

  double headline_micro_auc() const;
};

RunReport score_predictions(const PredictionSet& predictions, const ConceptGraph& graph);

// kind,label,fpr,tpr,threshold rows: the micro curve, then one per label.
std::string roc_csv(const PredictionSet& predictions, const ConceptGraph& graph);

struct FitResult {
  ParameterSet params;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainOutcome {
  Checkpoint checkpoint;
  RunReport report;
  PredictionSet test_predictions;
};

TrainOutcome train(const TrainConfig& config, const ConceptGraph& graph,
                   std::span<const RawQuery> records, const EpochCallback& on_epoch = {});
// Trains on an already prepared split.
TrainOutcome train(const TrainConfig& config, const ConceptGraph& graph,
                   const PreparedData& data, const EpochCallback& on_epoch = {});

struct Evaluation {
  RunReport report;
  PredictionSet predictions;
};

// Throws LookupError if the checkpoint does not match graph or vocab.
Evaluation evaluate(const Checkpoint& checkpoint, const ConceptGraph& graph,
                    std::span<const RawQuery> records, const Vocabulary& vocab);

// Fold of each record: a seeded shuffle dealt round-robin.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct CrossValidation {
  RunReport pooled;
  std::vector<RunReport> folds;
  PredictionSet predictions;  // test predictions of every fold, pooled
};

CrossValidation cross_validate(const TrainConfig& config, const ConceptGraph& graph,
                               std::span<const RawQuery> records, std::size_t folds = 5,
                               const EpochCallback& on_epoch = {});

// Per-transition logistic regression on bag-of-words and bag-of-POS counts.
struct LogisticBaseline {
  ParameterSet params;  // "lr.W" (N x F), "lr.b" (N)
  std::size_t word_vocab = 0;
  std::size_t pos_vocab = 0;

  static LogisticBaseline initialize(std::size_t num_transitions, std::size_t word_vocab,
                                     std::size_t pos_vocab, std::uint64_t seed);
  std::size_t num_features() const { return word_vocab + pos_vocab; }
  Tensor features(std::span<const EncodedQuery* const> queries) const;
  std::vector<std::vector<double>> predict(std::span<const EncodedQuery> queries) const;
};

struct BaselineOutcome {
  LogisticBaseline model;
  RunReport report;
  PredictionSet test_predictions;
};

BaselineOutcome lr_baseline(const TrainConfig& config, const ConceptGraph& graph,
                            const PreparedData& data, const EpochCallback& on_epoch = {});

struct Comparison {
  std::vector<RunReport> reports;
  // variant,target,seed,split_hash,micro_auc,macro_auc,coverage_error,lrap,energy,best_epoch
  std::string summary_csv() const;
  // transition x variant AUC table; variants without a transition head are left out
  std::string per_transition_csv() const;
};

// Variant names as accepted by parse_variant, plus "LR".
Comparison compare_variants(const TrainConfig& config, const ConceptGraph& graph,
                            std::span<const RawQuery> records,
                            std::span<const std::string> variants,
                            const EpochCallback& on_epoch = {});

// Writes summary.csv, epochs.csv, per_transition_auc.csv, per_concept_auc.csv,
// predictions.jsonl and roc.csv under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunReport& report,
                       const PredictionSet& predictions, const ConceptGraph& graph);

std::string format_double(double value);

}  // namespace intentgraph

#endif  // INTENTGRAPH_HARNESS_HPP_
