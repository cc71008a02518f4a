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

#ifndef INTENTGRAPH_METRICS_HPP_
#define INTENTGRAPH_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace intentgraph {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // predict positive when score >= threshold
};

struct RocResult {
  std::vector<RocPoint> curve;  // from (0, 0) to (1, 1)
  double auc = 0.0;
};

// Threshold sweep with tied scores grouped into one step, so the area equals
// P(score_pos > score_neg) + P(tie) / 2. Throws Error when `truth` lacks
// either class.
RocResult roc_and_auc(std::span<const std::uint8_t> truth, std::span<const double> scores);

// Q x L row-major truth and score matrices.
struct EvalBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> truths;
  std::vector<double> scores;

  EvalBatch() = default;
  EvalBatch(std::size_t rows, std::size_t cols);

  std::span<const std::uint8_t> truth_row(std::size_t r) const;
  std::span<const double> score_row(std::size_t r) const;
  void append(std::span<const std::uint8_t> truth, std::span<const double> score);
  void validate() const;
};

struct AucSummary {
  double micro = 0.0;
  double macro = 0.0;
  // Empty where the label has only one class in the batch.
  std::vector<std::optional<double>> per_label;
  std::size_t skipped_labels = 0;
};

// micro: AUC over all Q*L flattened pairs. macro: mean AUC over labels that
// have both classes. Throws when no label has both classes.
AucSummary micro_macro_auc(const EvalBatch& batch);

// Ranks are pessimistic: rank(j) = |{l : score_l >= score_j}|. Rows without
// positives are skipped and counted in `skipped_rows`.
double coverage_error(const EvalBatch& batch, std::size_t* skipped_rows = nullptr);
double label_ranking_average_precision(const EvalBatch& batch,
                                       std::size_t* skipped_rows = nullptr);

struct MetricSummary {
  double micro_auc = 0.0;
  double macro_auc = 0.0;
  double coverage_error = 0.0;
  double lrap = 0.0;
  std::vector<std::optional<double>> per_label_auc;
  std::size_t skipped_labels = 0;
  std::size_t skipped_rows = 0;
};

MetricSummary summarize(const EvalBatch& batch);

}  // namespace intentgraph

#endif  // INTENTGRAPH_METRICS_HPP_
