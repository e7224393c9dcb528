/*
 * Copyright 2026 The hsseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// hsseg command-line entry point.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hsseg/error.hpp"
#include "hsseg/harness.hpp"

namespace fs = std::filesystem;
using namespace hsseg;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string data;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON harness config; flags override its fields")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output root (default $HSSEG_OUT or ./hsseg_out)");
  sub->add_option("--data", c.data, "dataset root (default <out>/data)");
}

HarnessConfig base_config(const Common& c) {
  HarnessConfig cfg = c.config.empty() ? HarnessConfig{} : load_config(c.config);
  if (c.config.empty()) cfg.out_dir = default_out_dir();
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (!c.data.empty()) cfg.data_root = c.data;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypersphere-loss anomaly segmentation toolkit"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, cmp_c;
  bool force = false;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write the synthetic dataset and its manifest");
  add_common(gen, gen_c);
  std::size_t n_categories = 10;
  std::uint64_t data_seed = 0;
  auto* gen_ncat = gen->add_option("--categories", n_categories, "number of categories (1-10)");
  auto* gen_seed = gen->add_option("--seed", data_seed, "dataset seed");
  gen->add_flag("--force", force, "replace an existing dataset");

  // train
  auto* train = app.add_subcommand("train", "run the category x seed x loss matrix");
  add_common(train, train_c);
  std::vector<std::uint64_t> seeds;
  int epochs = 0;
  std::vector<std::string> losses, category_names;
  std::string supervision;
  std::size_t batch_size = 0;
  int jobs = 0;
  auto* tr_seeds = train->add_option("--seed,--seeds", seeds, "training seeds");
  auto* tr_epochs = train->add_option("--epochs", epochs, "epochs per run")->check(CLI::PositiveNumber);
  auto* tr_loss = train->add_option("--loss", losses, "loss variant(s): baseline|proposed");
  auto* tr_sup = train->add_option("--supervision", supervision, "unsup|semi");
  auto* tr_bs = train->add_option("--batch-size", batch_size, "images per batch")->check(CLI::PositiveNumber);
  auto* tr_cat = train->add_option("--category", category_names, "restrict to these categories");
  auto* tr_jobs = train->add_option("--jobs", jobs, "worker processes")->check(CLI::PositiveNumber);
  train->add_flag("--force", force, "re-run runs already in the results file");

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint on a category's test split");
  add_common(eval, eval_c);
  std::string checkpoint, eval_category, eval_sup = "unsup", heatmap_dir;
  std::uint64_t eval_seed = 0;
  bool dump = false;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--category", eval_category, "category name")->required();
  eval->add_option("--supervision", eval_sup, "unsup|semi (semi excludes the held-in images)");
  eval->add_option("--seed", eval_seed, "run seed (selects held-in images in semi mode)");
  eval->add_flag("--dump-heatmaps", dump, "write one heatmap PGM per test image");
  eval->add_option("--heatmap-dir", heatmap_dir, "heatmap directory (default <out>/heatmaps/<category>)");

  // compare
  auto* cmp = app.add_subcommand("compare", "compare methods from run records");
  add_common(cmp, cmp_c);
  std::vector<std::string> results;
  std::vector<std::string> metrics;
  double alpha = 0.0;
  cmp->add_option("--results", results, "results JSONL file(s) (default <out>/results.jsonl)");
  cmp->add_option("--metric", metrics, "auroc|ap (default both)");
  std::string matrix;
  cmp->add_option("--matrix", matrix, "CSV score matrix (method,<dataset>,...) instead of run records")
      ->excludes(cmp->get_option("--results"));
  auto* cmp_alpha = cmp->add_option("--alpha", alpha, "significance level for the cliques");

  app.add_subcommand("loss-check", "finite-difference check of every analytic gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      HarnessConfig cfg = base_config(gen_c);
      if (*gen_ncat) cfg.num_categories = n_categories;
      if (*gen_seed) cfg.data_seed = data_seed;
      cmd_gen_data(cfg, force, std::cout);
    } else if (train->parsed()) {
      HarnessConfig cfg = base_config(train_c);
      if (*tr_seeds) cfg.seeds = seeds;
      if (*tr_epochs) cfg.epochs = epochs;
      if (*tr_loss) {
        cfg.variants.clear();
        for (const auto& l : losses) cfg.variants.push_back(parse_loss_variant(l));
      }
      if (*tr_sup) cfg.supervision = parse_supervision(supervision);
      if (*tr_bs) cfg.batch_size = batch_size;
      if (*tr_cat) cfg.categories = category_names;
      if (*tr_jobs) cfg.jobs = jobs;
      const auto records = cmd_train(cfg, force, std::cout);
      std::cout << records.size() << " run records in " << cfg.results_path().string() << "\n";
    } else if (eval->parsed()) {
      const HarnessConfig cfg = base_config(eval_c);
      EvalRequest req;
      req.checkpoint = checkpoint;
      req.data_root = cfg.resolved_data_root();
      req.category = eval_category;
      req.supervision = parse_supervision(eval_sup);
      req.seed = eval_seed;
      if (dump) {
        req.heatmap_dir = heatmap_dir.empty() ? cfg.out_dir / "heatmaps" / eval_category : fs::path(heatmap_dir);
      }
      cmd_eval(req, std::cout);
    } else if (cmp->parsed()) {
      HarnessConfig cfg = base_config(cmp_c);
      if (*cmp_alpha) cfg.alpha = alpha;
      validate(cfg);
      std::vector<fs::path> files;
      for (const auto& r : results) files.emplace_back(r);
      if (files.empty()) files.push_back(cfg.results_path());
      if (!matrix.empty()) {
        cmd_compare_matrix(matrix, cfg.alpha, cfg.out_dir, std::cout);
        return 0;
      }
      if (metrics.empty()) metrics = {"auroc", "ap"};
      for (const auto& m : metrics) {
        cmd_compare(files, parse_metric(m), cfg.alpha, cfg.out_dir, std::cout);
        std::cout << "\n";
      }
    } else {
      return cmd_loss_check(std::cout);
    }
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
