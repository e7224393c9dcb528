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


#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsseg/losses.hpp"
#include "hsseg/metrics.hpp"
#include "hsseg/stats.hpp"
#include "hsseg/train.hpp"

namespace hsseg {

// Experiment settings shared by the subcommands. Paths left empty resolve
// against `out_dir` (data under <out>/data, results in <out>/results.jsonl).
struct HarnessConfig {
  std::filesystem::path data_root;
  std::vector<std::string> categories;  // empty: every category in the manifest
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5};
  int epochs = 50;
  std::size_t batch_size = 16;
  std::vector<LossVariant> variants{LossVariant::baseline, LossVariant::proposed};
  Supervision supervision = Supervision::unsupervised;
  double alpha = 0.10;
  std::filesystem::path out_dir = "hsseg_out";
  std::uint64_t data_seed = 0;
  std::size_t num_categories = 10;
  int jobs = 1;

  std::filesystem::path resolved_data_root() const;
  std::filesystem::path results_path() const;
};

// Canonical form: fixed key order, every field present.
nlohmann::ordered_json config_to_json(const HarnessConfig& cfg);
// Missing keys keep their defaults; unknown keys throw ValidationError.
HarnessConfig config_from_json(const nlohmann::json& j);
HarnessConfig load_config(const std::filesystem::path& path);
void validate(const HarnessConfig& cfg);

// Default output root: $HSSEG_OUT when set, else "hsseg_out".
std::filesystem::path default_out_dir();

struct RunRecord {
  std::string run_id;
  std::string category;
  std::uint64_t seed = 0;
  LossVariant loss_variant = LossVariant::proposed;
  Supervision supervision = Supervision::unsupervised;
  int epochs = 0;
  double pixel_auroc = 0.0;
  double pixel_ap = 0.0;
  double wall_time_s = 0.0;
  std::string config_digest;
  std::string created_at;
};

nlohmann::ordered_json record_to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);
// One JSON line without the timing fields (created_at, wall_time_s).
std::string record_fingerprint(const RunRecord& r);

// Everything a single run depends on besides its seed.
struct RunSpec {
  std::string category;
  LossVariant variant = LossVariant::proposed;
  Supervision supervision = Supervision::unsupervised;
  int epochs = 50;
  std::size_t batch_size = 16;
  std::string dataset_digest;  // hash of the dataset manifest
};

nlohmann::ordered_json run_spec_json(const RunSpec& spec);
std::string config_digest(const RunSpec& spec);
std::string make_run_id(const RunSpec& spec, std::uint64_t seed);
std::string hex64(std::uint64_t v);

// Writes num_categories categories under the data root. An existing
// non-empty root is replaced only with `force`, and only when it holds a
// dataset manifest.
void cmd_gen_data(const HarnessConfig& cfg, bool force, std::ostream& log);

// Runs the category x seed x variant matrix. Each finished run leaves
// <out>/checkpoints/<run_id>.ckpt, <out>/logs/<run_id>.jsonl and one line in
// the results file, appended under an exclusive lock once evaluation is done.
// Runs whose run_id is already recorded are skipped unless `force`.
// With jobs > 1 runs are spread over forked worker processes.
std::vector<RunRecord> cmd_train(const HarnessConfig& cfg, bool force, std::ostream& log);

// Trains and evaluates one run without touching the results file.
RunRecord execute_run(const CategoryData& data, const RunSpec& spec, std::uint64_t seed,
                      FcnParams* params_out = nullptr, std::vector<EpochLog>* log_out = nullptr);

struct EvalRequest {
  std::filesystem::path checkpoint;
  std::filesystem::path data_root;
  std::string category;
  Supervision supervision = Supervision::unsupervised;
  std::uint64_t seed = 0;  // selects the held-in images in semi mode
  std::optional<std::filesystem::path> heatmap_dir;
};

PixelScores cmd_eval(const EvalRequest& req, std::ostream& out);

// Last record per run_id wins; malformed lines throw.
std::vector<RunRecord> read_results(const std::filesystem::path& path);
void append_result(const std::filesystem::path& path, const RunRecord& r);

enum class Metric { auroc, ap };
std::string metric_name(Metric m);
Metric parse_metric(const std::string& s);

// Method label: the loss variant, suffixed with "-semi" for semi-supervised runs.
std::string method_label(const RunRecord& r);

struct Comparison {
  Metric metric = Metric::auroc;
  ScoreMatrix means;  // seed means
  std::vector<std::vector<double>> stds;  // sample std over seeds, 0 for one seed
  std::vector<std::vector<std::size_t>> seed_counts;
  CdModel model;
};

Comparison compare_records(const std::vector<RunRecord>& records, Metric metric, double alpha);
std::string comparison_csv(const Comparison& c);
std::string comparison_table(const Comparison& c);

// Reads the results files, writes <out>/compare_<metric>.csv and
// <out>/cd_<metric>.svg and prints the table and pairwise tests.
Comparison cmd_compare(const std::vector<std::filesystem::path>& results, Metric metric,
                       double alpha, const std::filesystem::path& out_dir, std::ostream& out);

// Same analysis for a ready-made CSV score matrix (methods x datasets, higher
// is better). Writes <out>/<csv stem>_cd.svg.
CdModel cmd_compare_matrix(const std::filesystem::path& csv, double alpha,
                           const std::filesystem::path& out_dir, std::ostream& out);

// Returns the process exit code: 0 when every check passes, 2 otherwise.
int cmd_loss_check(std::ostream& out);

}  // namespace hsseg
