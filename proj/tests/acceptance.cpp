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

// Acceptance checks. Prints one line per criterion and exits non-zero if any
// criterion fails. "fast" runs 1, 2, 3, 7 and 8; "benchmark" runs 4, 5 and 6.
// Benchmark runs use 32/8/32 dims, lr 3e-3 and energy weight 3.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "intentgraph/checkpoint.hpp"
#include "intentgraph/concept_graph.hpp"
#include "intentgraph/corpus.hpp"
#include "intentgraph/error.hpp"
#include "intentgraph/gradcheck.hpp"
#include "intentgraph/harness.hpp"
#include "intentgraph/losses.hpp"
#include "intentgraph/metrics.hpp"
#include "intentgraph/model.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace intentgraph;

namespace {

const fs::path kSource = INTENTGRAPH_SOURCE_DIR;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// `prior_seconds` covers work done before the check itself runs.
bool report(int id, const std::string& title, double budget_seconds,
            const std::function<Outcome()>& check, double prior_seconds = 0.0) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = prior_seconds + seconds_since(start);
  const bool in_time = elapsed < budget_seconds;
  const bool pass = o.pass && in_time;
  std::ostringstream line;
  line << "criterion " << id << " " << (pass ? "PASS" : "FAIL") << ": " << title << "; "
       << o.detail << "; " << format_double(std::round(elapsed * 100) / 100) << " s of "
       << budget_seconds << " s";
  if (!in_time) line << " (over budget)";
  std::cout << line.str() << std::endl;
  return pass;
}

// ---- 1: gradient check ---------------------------------------------------

ModelConfig tiny_model() {
  ModelConfig c;
  c.word_vocab = 20;
  c.pos_vocab = 8;
  c.word_dim = 6;
  c.pos_dim = 4;
  c.hidden_dim = 6;
  c.num_concepts = 3;
  c.num_transitions = 3;
  return c;
}

Outcome gradcheck_mtl() {
  const ModelConfig cfg = tiny_model();
  const ConceptGraph graph = random_ring_graph(3, 3);
  const TransferMatrix a = build_transfer_matrix(graph);
  Model model = Model::initialize(cfg, 1);
  // Non-zero biases keep every relu and projection path active.
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    Tensor& v = model.parameters().value(i);
    if (v.shape().size() == 1) v = testing::random_tensor(v.shape(), 500 + i, -0.5, 0.5);
  }
  model.parameters().value(*model.parameters().find("concept.b_theta"))[0] = 0.4;
  const auto batch = random_queries(cfg, 4, 2, 5, 2);
  std::vector<const EncodedQuery*> ptrs;
  for (const EncodedQuery& q : batch) ptrs.push_back(&q);
  const BatchLabels labels = BatchLabels::from(ptrs);
  LossConfig loss;
  loss.variant = Variant::kCoCTIMTL;
  auto objective = [&](const Model& m, std::vector<Tensor>* grads, double* energy_part) {
    ad::Tape tape;
    const BoundModel bound = m.bind(tape, grads);
    const ForwardVars f = forward(bound, PaddedBatch::from(std::span<const EncodedQuery>(batch)));
    const ad::Var l = loss_for_variant(loss, f, labels, a);
    if (energy_part) {
      *energy_part = energy(f.concept_probs, f.transition_probs, a, labels.concept_cardinality,
                            labels.transition_cardinality, loss.temperature)
                         .value()[0];
    }
    if (grads) tape.backward(l);
    return l.value()[0];
  };
  std::vector<Tensor> grads = model.parameters().zero_gradients();
  double energy_value = 0.0;
  objective(model, &grads, &energy_value);
  double worst = 0.0;
  std::size_t zero_params = 0;
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    const auto numeric = testing::central_difference(
        [&](const Tensor& probe) {
          Model copy = model;
          copy.parameters().value(i) = probe;
          return objective(copy, nullptr, nullptr);
        },
        model.parameters().value(i), 1e-5);
    double norm = 0.0;
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      const double an = grads[i][k];
      const double scale = std::max({std::abs(an), std::abs(numeric[k]), 1e-6});
      worst = std::max(worst, std::abs(an - numeric[k]) / scale);
      norm += std::abs(an);
    }
    if (norm == 0.0) ++zero_params;
  }
  std::ostringstream d;
  d << "max relative error " << worst << " over " << model.parameters().size()
    << " tensors, " << zero_params << " with zero gradient, energy term " << energy_value;
  return {worst < 1e-3 && zero_params == 0 && energy_value > 0.0, d.str()};
}

// ---- 2: metric oracles ---------------------------------------------------

double oracle_count(std::span<const double> x, std::span<const double> y, std::size_t c) {
  const std::size_t l = x.size();
  if (c == 0 || c == l) return 0.0;
  std::size_t v = 0;
  for (std::size_t p = 0; p < l; ++p)
    for (std::size_t q = 0; q < l; ++q) v += (y[p] < y[q] && x[p] >= x[q]) ? 1 : 0;
  return static_cast<double>(v) / static_cast<double>(c * (l - c));
}

std::size_t oracle_rank(std::span<const double> s, std::size_t j) {
  std::size_t r = 0;
  for (double v : s) r += v >= s[j] ? 1 : 0;
  return r;
}

Outcome metric_oracles() {
  std::mt19937_64 rng(2024);
  std::size_t mismatches = 0, compared = 0;
  for (int instance = 0; instance < 500; ++instance) {
    const std::size_t l = 1 + rng() % 12;
    const std::size_t q = 1 + rng() % 50;
    const int levels = 1 + static_cast<int>(rng() % 8);
    EvalBatch b(0, l);
    std::vector<double> projected(q * l);
    for (std::size_t r = 0; r < q; ++r) {
      std::vector<std::uint8_t> t(l);
      std::vector<double> s(l);
      for (std::size_t j = 0; j < l; ++j) {
        t[j] = rng() % 3 == 0;
        s[j] = static_cast<double>(rng() % levels) / levels;
        projected[r * l + j] = static_cast<double>(rng() % levels);
      }
      b.append(t, s);
    }
    for (std::size_t r = 0; r < q; ++r) {
      const auto t = b.truth_row(r);
      const auto s = b.score_row(r);
      const std::size_t c = static_cast<std::size_t>(std::count(t.begin(), t.end(), 1));
      const std::span<const double> y(projected.data() + r * l, l);
      ++compared;
      if (ranking_loss_count(s, y, c) != oracle_count(s, y, c)) ++mismatches;
    }
    double cov = 0.0, lrap = 0.0;
    std::size_t rows = 0;
    for (std::size_t r = 0; r < q; ++r) {
      const auto t = b.truth_row(r);
      const auto s = b.score_row(r);
      std::size_t worst = 0, positives = 0;
      double row = 0.0;
      for (std::size_t j = 0; j < l; ++j) {
        if (!t[j]) continue;
        ++positives;
        worst = std::max(worst, oracle_rank(s, j));
        std::size_t above = 0;
        for (std::size_t k = 0; k < l; ++k) above += (t[k] && s[k] >= s[j]) ? 1 : 0;
        row += static_cast<double>(above) / static_cast<double>(oracle_rank(s, j));
      }
      if (!positives) continue;
      ++rows;
      cov += static_cast<double>(worst);
      lrap += row / static_cast<double>(positives);
    }
    if (rows) {
      compared += 2;
      if (coverage_error(b) != cov / static_cast<double>(rows)) ++mismatches;
      if (std::abs(label_ranking_average_precision(b) - lrap / static_cast<double>(rows)) > 1e-12)
        ++mismatches;
    }
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < b.truths.size(); ++i) {
      if (!b.truths[i]) continue;
      for (std::size_t j = 0; j < b.truths.size(); ++j) {
        if (b.truths[j]) continue;
        pairs += 1.0;
        wins += b.scores[i] > b.scores[j] ? 1.0 : (b.scores[i] == b.scores[j] ? 0.5 : 0.0);
      }
    }
    if (pairs > 0.0) {
      ++compared;
      if (std::abs(roc_and_auc(b.truths, b.scores).auc - wins / pairs) > 1e-12) ++mismatches;
    }
    double macro = 0.0;
    std::size_t defined = 0;
    for (std::size_t j = 0; j < l; ++j) {
      double w = 0.0, n = 0.0;
      for (std::size_t r1 = 0; r1 < q; ++r1) {
        if (!b.truth_row(r1)[j]) continue;
        for (std::size_t r2 = 0; r2 < q; ++r2) {
          if (b.truth_row(r2)[j]) continue;
          const double x = b.score_row(r1)[j], y = b.score_row(r2)[j];
          n += 1.0;
          w += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
        }
      }
      if (n > 0.0) {
        macro += w / n;
        ++defined;
      }
    }
    ++compared;
    if (defined == 0) {
      bool threw = false;
      try {
        micro_macro_auc(b);
      } catch (const Error&) {
        threw = true;
      }
      if (!threw) ++mismatches;
    } else {
      const AucSummary s = micro_macro_auc(b);
      if (std::abs(s.micro - wins / pairs) > 1e-12 ||
          std::abs(s.macro - macro / static_cast<double>(defined)) > 1e-12)
        ++mismatches;
    }
  }
  std::ostringstream d;
  d << mismatches << " mismatches in " << compared << " comparisons";
  return {mismatches == 0, d.str()};
}

// ---- 3: graph oracles ----------------------------------------------------

Outcome graph_oracles() {
  std::mt19937_64 rng(77);
  std::size_t mismatches = 0, connected = 0;
  for (int g = 0; g < 1000; ++g) {
    const std::size_t m = 1 + rng() % 10;
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t s = 0; s < m; ++s)
      for (std::size_t t = 0; t < m; ++t)
        if (s != t || rng() % 8 == 0) all.emplace_back(s, t);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(std::min<std::size_t>(all.size(), rng() % 21));
    std::vector<std::string> names;
    for (std::size_t i = 0; i < m; ++i) names.push_back("n" + std::to_string(i));
    const ConceptGraph graph(names, all);
    const TransferMatrix a = build_transfer_matrix(graph);
    for (std::size_t c = 0; c < m; ++c)
      for (std::size_t n = 0; n < all.size(); ++n) {
        const std::uint8_t expect = all[n].first == c || all[n].second == c;
        if (a.at(c, n) != expect) ++mismatches;
      }
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::size_t> cs, ts;
      for (std::size_t c = 0; c < m; ++c)
        if (rng() % 4 == 0) cs.push_back(c);
      for (std::size_t n = 0; n < all.size(); ++n)
        if (rng() % 3 == 0) ts.push_back(n);
      std::vector<std::vector<std::size_t>> adj(m);
      std::vector<bool> used(m, false);
      for (std::size_t c : cs) used[c] = true;
      for (std::size_t n : ts) {
        adj[all[n].first].push_back(all[n].second);
        adj[all[n].second].push_back(all[n].first);
        used[all[n].first] = used[all[n].second] = true;
      }
      std::vector<bool> seen(m, false);
      std::size_t components = 0;
      for (std::size_t s = 0; s < m; ++s) {
        if (!used[s] || seen[s]) continue;
        ++components;
        std::queue<std::size_t> frontier;
        frontier.push(s);
        seen[s] = true;
        while (!frontier.empty()) {
          const std::size_t u = frontier.front();
          frontier.pop();
          for (std::size_t v : adj[u])
            if (!seen[v]) {
              seen[v] = true;
              frontier.push(v);
            }
        }
      }
      const bool expect = components <= 1;
      connected += expect ? 1 : 0;
      if (is_connected(active_subgraph(graph, cs, ts), graph) != expect) ++mismatches;
    }
  }
  std::ostringstream d;
  d << mismatches << " mismatches; " << connected << " of 5000 subgraphs connected";
  return {mismatches == 0, d.str()};
}

// ---- 7: model invariants -------------------------------------------------

Outcome model_invariants() {
  ModelConfig cfg = tiny_model();
  cfg.num_concepts = 5;
  cfg.num_transitions = 6;
  double worst_sum = 0.0, worst_pad = 0.0;
  std::size_t perm_mismatch = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Model model = Model::initialize(cfg, seed);
    if (seed > 2) {
      for (std::size_t i = 0; i < model.parameters().size(); ++i) {
        Tensor& v = model.parameters().value(i);
        v = testing::random_tensor(v.shape(), seed * 31 + i, -0.7, 0.7);
      }
    }
    const auto queries = random_queries(cfg, 40, 1, 20, seed + 10);
    const auto batched = model.predict_batch(queries);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      const auto& s = batched[i].token_scores;
      worst_sum = std::max(worst_sum, std::abs(std::accumulate(s.begin(), s.end(), 0.0) - 1.0));
      const Prediction alone = model.predict(queries[i]);
      auto diff = [&](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t k = 0; k < x.size(); ++k)
          worst_pad = std::max(worst_pad, std::abs(x[k] - y[k]));
      };
      diff(alone.concept_probs, batched[i].concept_probs);
      diff(alone.transition_probs, batched[i].transition_probs);
      diff(alone.token_scores, batched[i].token_scores);
    }
    std::vector<std::size_t> cperm(cfg.num_concepts), tperm(cfg.num_transitions);
    std::iota(cperm.begin(), cperm.end(), std::size_t{0});
    std::iota(tperm.begin(), tperm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(cperm.begin(), cperm.end(), rng);
    std::shuffle(tperm.begin(), tperm.end(), rng);
    ParameterSet permuted = model.parameters();
    auto permute_rows = [&](const std::string& name, const std::vector<std::size_t>& perm) {
      const std::size_t idx = *permuted.find(name);
      const Tensor& src = model.parameters().value(idx);
      const std::size_t width = src.size() / perm.size();
      for (std::size_t r = 0; r < perm.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
          permuted.value(idx)[r * width + c] = src[perm[r] * width + c];
    };
    permute_rows("concept.W", cperm);
    permute_rows("concept.b", cperm);
    permute_rows("transition.W", tperm);
    permute_rows("transition.b", tperm);
    const auto pb = Model(cfg, permuted).predict_batch(queries);
    for (std::size_t i = 0; i < queries.size(); ++i) {
      for (std::size_t k = 0; k < cperm.size(); ++k)
        perm_mismatch += pb[i].concept_probs[k] != batched[i].concept_probs[cperm[k]];
      for (std::size_t k = 0; k < tperm.size(); ++k)
        perm_mismatch += pb[i].transition_probs[k] != batched[i].transition_probs[tperm[k]];
    }
  }
  std::ostringstream d;
  d << "token score sum error " << worst_sum << ", padding difference " << worst_pad << ", "
    << perm_mismatch << " permutation mismatches";
  return {worst_sum <= 1e-9 && worst_pad <= 1e-12 && perm_mismatch == 0, d.str()};
}

// ---- 8: deterministic CLI runs -------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome deterministic_cli() {
  const fs::path root = fs::temp_directory_path() / "intentgraph_acceptance_det";
  fs::remove_all(root);
  std::vector<fs::path> runs;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = root / ("run" + std::to_string(run));
    const std::string cmd = std::string("\"") + INTENTGRAPH_CLI + "\" train --graph \"" +
                            (kSource / "data/graphs/tiny.graph").string() + "\" --data \"" +
                            (kSource / "data/fixtures/tiny.jsonl").string() + "\" --out \"" +
                            dir.string() + "\" --checkpoint \"" + (dir / "model.json").string() +
                            "\" --epochs 3 --word-dim 8 --pos-dim 4 --hidden-dim 8 --lr 0.01"
                            " --workers 4 --deterministic > \"" +
                            (root / ("log" + std::to_string(run))).string() + "\" 2>&1";
    fs::create_directories(root);
    if (std::system(cmd.c_str()) != 0) return {false, "train exited with an error"};
    runs.push_back(dir);
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(runs[0])) {
    ++files;
    const fs::path other = runs[1] / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  std::size_t second = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(runs[1])) ++second;
  const bool has_ckpt = fs::exists(runs[0] / "model.json");
  fs::remove_all(root);
  std::ostringstream d;
  d << files << " output files compared, " << differing << " differ";
  return {has_ckpt && files == second && differing == 0 && files >= 2, d.str()};
}

// ---- 4, 5, 6: benchmark --------------------------------------------------

TrainConfig benchmark_config(std::uint64_t seed) {
  TrainConfig c;
  c.word_dim = 32;
  c.pos_dim = 8;
  c.hidden_dim = 32;
  c.lr = 3e-3;
  c.epochs = 50;
  c.seed = seed;
  c.energy_weight = 3.0;
  c.deterministic = true;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

int run_benchmark() {
  const ConceptGraph graph = ConceptGraph::load(kSource / "data/graphs/benchmark.graph");
  const auto records = load_dataset(kSource / "data/benchmark/corpus.jsonl");
  const std::vector<std::string> variants = {"coCTI_MTL", "CTI", "coCTI", "LR"};
  std::vector<double> cti, coc, mtl, lr, e_coc, e_mtl, e_unit;
  double first_mtl_auc = 0.0, first_mtl_seconds = 0.0;
  std::size_t first_mtl_epochs = 0;
  const auto start = Clock::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TrainConfig config = benchmark_config(seed);
    const PreparedData data = prepare_split(graph, records, seed);
    for (const std::string& v : variants) {
      const auto run_start = Clock::now();
      if (v == "LR") {
        lr.push_back(lr_baseline(config, graph, data).report.headline_micro_auc());
        continue;
      }
      TrainConfig c = config;
      c.variant = parse_variant(v);
      const RunReport r = train(c, graph, data).report;
      const double auc = r.headline_micro_auc();
      if (v == "CTI") cti.push_back(auc);
      if (v == "coCTI") {
        coc.push_back(auc);
        e_coc.push_back(*r.mean_energy);
      }
      if (v == "coCTI_MTL") {
        mtl.push_back(auc);
        e_mtl.push_back(*r.mean_energy);
        if (seed == 1) {
          first_mtl_auc = auc;
          first_mtl_seconds = seconds_since(run_start);
          first_mtl_epochs = r.epochs.size();
        }
      }
    }
    TrainConfig unit = config;
    unit.energy_weight = 1.0;
    e_unit.push_back(*train(unit, graph, data).report.mean_energy);
    std::cerr << "seed " << seed << " done after " << seconds_since(start) << " s\n";
  }
  const double total = seconds_since(start);
  bool ok = true;
  ok &= report(4, "coCTI-MTL held-out micro-AUC >= 0.95 within 50 epochs", 600, [&] {
    std::ostringstream d;
    d << "micro-AUC " << first_mtl_auc << " after " << first_mtl_epochs << " epochs (seed 1)";
    return Outcome{first_mtl_auc >= 0.95 && first_mtl_epochs <= 50, d.str()};
  }, first_mtl_seconds);
  ok &= report(5, "median micro-AUC ordering over 5 seeds", 3600, [&] {
    const double a = median(cti), b = median(coc), c = median(mtl), d = median(lr);
    std::ostringstream s;
    s << "CTI " << a << ", coCTI " << b << ", coCTI_MTL " << c << ", LR " << d;
    return Outcome{b >= a - 0.01 && c >= b - 0.01 && d <= c - 0.02, s.str()};
  }, total);
  ok &= report(6, "median counting energy coCTI_MTL < coCTI over 5 seeds", 3600, [&] {
    const double a = median(e_mtl), b = median(e_coc);
    std::ostringstream s;
    s << "coCTI_MTL " << a << ", coCTI " << b << " (energy weight 1: coCTI_MTL "
      << median(e_unit) << ")";
    return Outcome{a < b, s.str()};
  }, total);
  return ok ? 0 : 1;
}

int run_fast() {
  bool ok = true;
  ok &= report(1, "coCTI-MTL gradient check on a tiny config", 60, gradcheck_mtl);
  ok &= report(2, "ranking count, coverage, LRAP and AUC match oracles", 30, metric_oracles);
  ok &= report(3, "transfer matrix and is_connected match oracles", 10, graph_oracles);
  ok &= report(7, "model invariants", 60, model_invariants);
  ok &= report(8, "train --deterministic is bit-identical", 120, deterministic_cli);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::cout.precision(6);
  const std::string mode = argc > 1 ? argv[1] : "fast";
  if (mode == "fast") return run_fast();
  if (mode == "benchmark") return run_benchmark();
  if (mode == "all") return run_fast() | run_benchmark();
  std::cerr << "usage: acceptance [fast|benchmark|all]\n";
  return 2;
}
