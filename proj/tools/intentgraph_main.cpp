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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "intentgraph/checkpoint.hpp"
#include "intentgraph/concept_graph.hpp"
#include "intentgraph/corpus.hpp"
#include "intentgraph/error.hpp"
#include "intentgraph/gradcheck.hpp"
#include "intentgraph/harness.hpp"
#include "intentgraph/util.hpp"

namespace fs = std::filesystem;
using namespace intentgraph;

namespace {

constexpr const char* kDataDirEnv = "INTENTGRAPH_DATA_DIR";

// Relative paths that do not exist from the working directory are looked up
// under $INTENTGRAPH_DATA_DIR.
fs::path resolve(const fs::path& p) {
  if (p.empty() || p.is_absolute() || fs::exists(p)) return p;
  if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) {
    const fs::path candidate = fs::path(dir) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return p;
}

const std::vector<std::string> kTrainKeys = {
    "variant",     "epochs",      "batch-size", "lr",       "seed",
    "patience",    "clip-norm",   "energy-weight", "temperature", "word-dim",
    "pos-dim",     "hidden-dim",  "output-activation", "workers", "graph",
    "data",        "checkpoint",  "out"};

struct TrainFlags {
  std::string config;
  std::map<std::string, std::string> values;
  bool deterministic = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--config", flags.config, "flat key=value file; flags override it");
  for (const std::string& key : kTrainKeys) cmd->add_option("--" + key, flags.values[key]);
  cmd->add_flag("--deterministic", flags.deterministic, "single worker, no wall-clock in reports");
}

TrainConfig build_config(const CLI::App* cmd, const TrainFlags& flags) {
  TrainConfig c;
  if (!flags.config.empty()) apply_config_text(c, read_file(resolve(flags.config)));
  for (const std::string& key : kTrainKeys) {
    if (cmd->count("--" + key) > 0) apply_setting(c, key, flags.values.at(key));
  }
  if (flags.deterministic) c.deterministic = true;
  c.graph_path = resolve(c.graph_path);
  c.dataset_path = resolve(c.dataset_path);
  if (c.graph_path.empty()) throw Error("--graph is required");
  if (c.dataset_path.empty()) throw Error("--data is required");
  if (c.report_out.empty()) throw Error("--out is required");
  if (c.checkpoint_out.empty()) c.checkpoint_out = c.report_out / "model.ckpt.json";
  c.validate();
  return c;
}

void log_epoch(const EpochRecord& e) {
  std::cerr << "epoch " << e.epoch << "  loss " << format_double(e.train_loss)
            << "  val_micro_auc " << format_double(e.validation_score) << "\n";
}

void print_headline(const RunReport& r) {
  std::cout << r.variant << ": ";
  if (r.transitions) {
    std::cout << "transition micro-AUC " << format_double(r.transitions->micro_auc)
              << ", macro-AUC " << format_double(r.transitions->macro_auc);
  }
  if (r.concepts) std::cout << "; concept micro-AUC " << format_double(r.concepts->micro_auc);
  if (r.mean_energy) std::cout << "; energy " << format_double(*r.mean_energy);
  std::cout << "\n";
}

int run_generate(const fs::path& graph_path, const fs::path& out, fs::path tallies,
                 const GeneratorConfig& config) {
  const ConceptGraph graph = ConceptGraph::load(resolve(graph_path));
  const GeneratedCorpus corpus = generate_synthetic(graph, config);
  write_file(out, serialize_dataset(corpus.queries));
  if (tallies.empty()) tallies = fs::path(out.string() + ".tallies.csv");
  write_file(tallies, corpus.tallies_csv(graph));
  std::cout << "wrote " << corpus.queries.size() << " queries to " << out.string() << "\n";
  return 0;
}

int run_train(const TrainConfig& c) {
  const ConceptGraph graph = ConceptGraph::load(c.graph_path);
  const auto records = load_dataset(c.dataset_path);
  const TrainOutcome out = train(c, graph, records, log_epoch);
  save_checkpoint(out.checkpoint, c.checkpoint_out);
  write_run_outputs(c.report_out, out.report, out.test_predictions, graph);
  print_headline(out.report);
  return 0;
}

int run_eval(const fs::path& checkpoint_path, const fs::path& graph_path,
             const fs::path& data_path, const fs::path& out_dir) {
  const Checkpoint checkpoint = load_checkpoint(resolve(checkpoint_path));
  const ConceptGraph graph = ConceptGraph::load(resolve(graph_path));
  const auto records = load_dataset(resolve(data_path));
  const Evaluation ev = evaluate(checkpoint, graph, records, checkpoint.vocab);
  if (!out_dir.empty()) write_run_outputs(out_dir, ev.report, ev.predictions, graph);
  print_headline(ev.report);
  return 0;
}

int run_cv(const TrainConfig& c, std::size_t folds) {
  const ConceptGraph graph = ConceptGraph::load(c.graph_path);
  const auto records = load_dataset(c.dataset_path);
  const CrossValidation cv = cross_validate(c, graph, records, folds, log_epoch);
  write_run_outputs(c.report_out, cv.pooled, cv.predictions, graph);
  std::string folds_csv = "fold,test_queries,micro_auc,macro_auc,best_epoch\n";
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    const RunReport& r = cv.folds[f];
    folds_csv += std::to_string(f) + "," + std::to_string(r.test_queries) + "," +
                 format_double(r.headline_micro_auc()) + "," +
                 (r.transitions ? format_double(r.transitions->macro_auc) : std::string()) +
                 "," + std::to_string(r.best_epoch) + "\n";
  }
  write_file(c.report_out / "folds.csv", folds_csv);
  print_headline(cv.pooled);
  return 0;
}

int run_compare(const TrainConfig& c, const std::string& variants) {
  const ConceptGraph graph = ConceptGraph::load(c.graph_path);
  const auto records = load_dataset(c.dataset_path);
  const std::vector<std::string> names = split(variants, ",");
  const Comparison cmp = compare_variants(c, graph, records, names, log_epoch);
  write_file(c.report_out / "comparison_summary.csv", cmp.summary_csv());
  write_file(c.report_out / "per_transition_auc.csv", cmp.per_transition_csv());
  std::cout << cmp.summary_csv();
  return 0;
}

int run_analyze(const fs::path& graph_path, const fs::path& data_path, std::size_t top_k,
                const fs::path& out) {
  const ConceptGraph graph = ConceptGraph::load(resolve(graph_path));
  std::cout << graph.num_concepts() << " concepts, " << graph.num_transitions()
            << " transitions, graph hash " << hex64(graph.fingerprint()) << "\n";
  for (const std::string& w : graph.warnings()) std::cout << "warning: " << w << "\n";
  if (data_path.empty()) return 0;
  const auto records = load_dataset(resolve(data_path));
  const Vocabulary vocab = Vocabulary::build(records);
  const auto encoded = encode_all(records, vocab, graph);
  const FrequencyReport stats = graph_stats(encoded, graph, top_k);
  std::cout << stats.queries << " queries, " << stats.connected
            << " with a connected active graph, " << vocab.word_size() << " word types, "
            << vocab.pos_size() << " POS tags\n";
  if (out.empty()) {
    std::cout << stats.to_csv(graph);
  } else {
    write_file(out, stats.to_csv(graph));
  }
  return 0;
}

struct GradcheckFlags {
  ModelConfig model;
  std::string variant = "coCTI_MTL";
  std::size_t queries = 4;
  std::size_t max_len = 5;
  std::uint64_t seed = 1;
  double step = 1e-5;
  double tolerance = 1e-3;
};

int run_gradcheck(const GradcheckFlags& f) {
  const ConceptGraph graph = random_ring_graph(f.model.num_concepts, f.model.num_transitions);
  const Model model = Model::initialize(f.model, f.seed);
  const auto batch = random_queries(f.model, f.queries, 1, f.max_len, f.seed + 1);
  LossConfig loss;
  loss.variant = parse_variant(f.variant);
  const GradcheckReport report =
      gradient_check(model, batch, loss, build_transfer_matrix(graph), f.step);
  for (const GradcheckEntry& e : report.parameters) {
    std::cout << e.name << " (" << e.size << "): " << format_double(e.max_relative_error) << "\n";
  }
  const bool ok = report.max_relative_error < f.tolerance;
  std::cout << "max relative error " << format_double(report.max_relative_error)
            << (ok ? " (ok)" : " (FAILED)") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-graph intent detection: training, evaluation and analysis"};
  app.require_subcommand(1);
  app.footer(std::string("Relative input paths fall back to $") + kDataDirEnv + ".");

  fs::path gen_graph, gen_out, gen_tallies;
  GeneratorConfig gen;
  bool gen_independent = false;
  auto* generate = app.add_subcommand("generate", "write a synthetic labelled corpus");
  generate->add_option("--graph", gen_graph)->required();
  generate->add_option("--out", gen_out, "JSONL output")->required();
  generate->add_option("--tallies", gen_tallies, "tally CSV (default <out>.tallies.csv)");
  generate->add_option("--queries", gen.n_queries);
  generate->add_option("--vocab-size", gen.vocab_size);
  generate->add_option("--connectors", gen.templates_per_transition);
  generate->add_option("--noise-rate", gen.noise_rate);
  generate->add_option("--chain-bias", gen.chain_bias);
  generate->add_option("--extra-concept-rate", gen.extra_concept_rate);
  generate->add_option("--seed", gen.seed);
  generate->add_flag("--independent", gen_independent, "sample transitions independently");

  TrainFlags train_flags, cv_flags, compare_flags;
  auto* train_cmd = app.add_subcommand("train", "train on a 70/10/20 split");
  add_train_flags(train_cmd, train_flags);

  fs::path eval_ckpt, eval_graph, eval_data, eval_out;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--graph", eval_graph)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--out", eval_out, "directory for reports and predictions");

  std::size_t folds = 5;
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation with pooled test metrics");
  add_train_flags(cv, cv_flags);
  cv->add_option("--folds", folds);

  std::string variants = "CTI,coCTI,coCTI_MTL,LR";
  auto* compare = app.add_subcommand("compare", "train variants on one split and tabulate");
  add_train_flags(compare, compare_flags);
  compare->add_option("--variants", variants, "comma-separated; LR is the baseline");

  fs::path an_graph, an_data, an_out;
  std::size_t top_k = 9;
  auto* analyze = app.add_subcommand("analyze", "label frequencies and connectivity");
  analyze->add_option("--graph", an_graph)->required();
  analyze->add_option("--data", an_data);
  analyze->add_option("--top-k", top_k);
  analyze->add_option("--out", an_out, "CSV output (default stdout)");

  GradcheckFlags gc;
  gc.model.word_vocab = 20;
  gc.model.pos_vocab = 8;
  gc.model.word_dim = 6;
  gc.model.pos_dim = 4;
  gc.model.hidden_dim = 6;
  gc.model.num_concepts = 3;
  gc.model.num_transitions = 3;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of all gradients");
  gradcheck->add_option("--variant", gc.variant);
  gradcheck->add_option("--word-vocab", gc.model.word_vocab);
  gradcheck->add_option("--pos-vocab", gc.model.pos_vocab);
  gradcheck->add_option("--word-dim", gc.model.word_dim);
  gradcheck->add_option("--pos-dim", gc.model.pos_dim);
  gradcheck->add_option("--hidden-dim", gc.model.hidden_dim);
  gradcheck->add_option("--concepts", gc.model.num_concepts);
  gradcheck->add_option("--transitions", gc.model.num_transitions);
  gradcheck->add_option("--queries", gc.queries);
  gradcheck->add_option("--max-len", gc.max_len);
  gradcheck->add_option("--seed", gc.seed);
  gradcheck->add_option("--step", gc.step);
  gradcheck->add_option("--tolerance", gc.tolerance);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      gen.connected = !gen_independent;
      return run_generate(gen_graph, gen_out, gen_tallies, gen);
    }
    if (*train_cmd) return run_train(build_config(train_cmd, train_flags));
    if (*eval) return run_eval(eval_ckpt, eval_graph, eval_data, eval_out);
    if (*cv) return run_cv(build_config(cv, cv_flags), folds);
    if (*compare) return run_compare(build_config(compare, compare_flags), variants);
    if (*analyze) return run_analyze(an_graph, an_data, top_k, an_out);
    if (*gradcheck) return run_gradcheck(gc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
