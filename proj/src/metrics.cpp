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

#include "intentgraph/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "intentgraph/error.hpp"

namespace intentgraph {

RocResult roc_and_auc(std::span<const std::uint8_t> truth, std::span<const double> scores) {
  if (truth.size() != scores.size()) throw ShapeError("roc: truth and scores differ in length");
  const auto positives =
      static_cast<double>(std::count_if(truth.begin(), truth.end(), [](auto t) { return t != 0; }));
  const double negatives = static_cast<double>(truth.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw Error("AUC is undefined when only one class is present");
  }
  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult out;
  out.curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  double tp = 0.0, fp = 0.0, area = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    const double tp_before = tp, fp_before = fp;
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      (truth[order[i]] ? tp : fp) += 1.0;
    }
    area += (fp - fp_before) * (tp + tp_before) / 2.0;
    out.curve.push_back({fp / negatives, tp / positives, threshold});
  }
  out.auc = area / (positives * negatives);
  return out;
}

EvalBatch::EvalBatch(std::size_t rows_, std::size_t cols_)
    : rows(rows_), cols(cols_), truths(rows_ * cols_, 0), scores(rows_ * cols_, 0.0) {}

std::span<const std::uint8_t> EvalBatch::truth_row(std::size_t r) const {
  return std::span<const std::uint8_t>(truths).subspan(r * cols, cols);
}

std::span<const double> EvalBatch::score_row(std::size_t r) const {
  return std::span<const double>(scores).subspan(r * cols, cols);
}

void EvalBatch::append(std::span<const std::uint8_t> truth, std::span<const double> score) {
  if (rows == 0 && cols == 0) cols = truth.size();
  if (truth.size() != cols || score.size() != cols) {
    throw ShapeError("eval batch row has the wrong number of labels");
  }
  truths.insert(truths.end(), truth.begin(), truth.end());
  scores.insert(scores.end(), score.begin(), score.end());
  ++rows;
}

void EvalBatch::validate() const {
  if (truths.size() != rows * cols || scores.size() != rows * cols) {
    throw ShapeError("eval batch truth and score matrices differ in shape");
  }
  for (std::uint8_t t : truths) {
    if (t > 1) throw Error("eval batch truths must be binary");
  }
}

AucSummary micro_macro_auc(const EvalBatch& batch) {
  batch.validate();
  AucSummary out;
  out.micro = roc_and_auc(batch.truths, batch.scores).auc;
  double total = 0.0;
  std::size_t used = 0;
  std::vector<std::uint8_t> truth(batch.rows);
  std::vector<double> score(batch.rows);
  for (std::size_t l = 0; l < batch.cols; ++l) {
    for (std::size_t r = 0; r < batch.rows; ++r) {
      truth[r] = batch.truths[r * batch.cols + l];
      score[r] = batch.scores[r * batch.cols + l];
    }
    const auto pos = std::count(truth.begin(), truth.end(), std::uint8_t{1});
    if (pos == 0 || static_cast<std::size_t>(pos) == truth.size()) {
      out.per_label.push_back(std::nullopt);
      ++out.skipped_labels;
      continue;
    }
    const double auc = roc_and_auc(truth, score).auc;
    out.per_label.push_back(auc);
    total += auc;
    ++used;
  }
  if (used == 0) throw Error("no label has both classes; macro-AUC is undefined");
  out.macro = total / static_cast<double>(used);
  return out;
}

namespace {

// Sorts labels by descending score and walks tie groups. For each label
// returns the pessimistic rank |{l : score_l >= score_j}| and the number of
// positive labels within that rank.
struct RowRanks {
  std::vector<std::size_t> rank;
  std::vector<std::size_t> positives_within;
};

RowRanks rank_row(std::span<const std::uint8_t> truth, std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  RowRanks out{std::vector<std::size_t>(scores.size()), std::vector<std::size_t>(scores.size())};
  std::size_t seen = 0, seen_true = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t end = i;
    while (end < order.size() && scores[order[end]] == scores[order[i]]) {
      if (truth[order[end]]) ++seen_true;
      ++end;
    }
    seen = end;
    for (; i < end; ++i) {
      out.rank[order[i]] = seen;
      out.positives_within[order[i]] = seen_true;
    }
  }
  return out;
}

template <typename RowFn>
double mean_over_rows(const EvalBatch& batch, std::size_t* skipped_rows, RowFn row_value) {
  batch.validate();
  double total = 0.0;
  std::size_t used = 0, skipped = 0;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const auto truth = batch.truth_row(r);
    if (std::none_of(truth.begin(), truth.end(), [](auto t) { return t != 0; })) {
      ++skipped;
      continue;
    }
    total += row_value(truth, batch.score_row(r));
    ++used;
  }
  if (skipped_rows) *skipped_rows = skipped;
  if (used == 0) throw Error("no row has a positive label");
  return total / static_cast<double>(used);
}

}  // namespace

double coverage_error(const EvalBatch& batch, std::size_t* skipped_rows) {
  return mean_over_rows(batch, skipped_rows, [](auto truth, auto scores) {
    const RowRanks ranks = rank_row(truth, scores);
    std::size_t worst = 0;
    for (std::size_t j = 0; j < truth.size(); ++j)
      if (truth[j]) worst = std::max(worst, ranks.rank[j]);
    return static_cast<double>(worst);
  });
}

double label_ranking_average_precision(const EvalBatch& batch, std::size_t* skipped_rows) {
  return mean_over_rows(batch, skipped_rows, [](auto truth, auto scores) {
    const RowRanks ranks = rank_row(truth, scores);
    double sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (!truth[j]) continue;
      ++positives;
      sum += static_cast<double>(ranks.positives_within[j]) / static_cast<double>(ranks.rank[j]);
    }
    return sum / static_cast<double>(positives);
  });
}

MetricSummary summarize(const EvalBatch& batch) {
  MetricSummary s;
  const AucSummary auc = micro_macro_auc(batch);
  s.micro_auc = auc.micro;
  s.macro_auc = auc.macro;
  s.per_label_auc = auc.per_label;
  s.skipped_labels = auc.skipped_labels;
  s.coverage_error = coverage_error(batch, &s.skipped_rows);
  s.lrap = label_ranking_average_precision(batch);
  return s;
}

}  // namespace intentgraph
