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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hsseg {

struct WilcoxonResult {
  double statistic = 0.0;  // W = min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  std::size_t n = 0;       // non-zero differences
  double p_value = 1.0;    // two-sided
  bool exact = true;
};

// Largest n for which the exact null distribution is used.
constexpr std::size_t kWilcoxonExactMax = 20;

// Paired two-sided Wilcoxon signed-rank test on d = x - y. Zero differences
// are dropped and |d| ranked with average ranks for ties. For n <= 20 the p
// value is exact: the share of the 2^n sign assignments of the observed ranks
// whose min(W+, W-) is <= W. Larger n use the normal approximation with tie
// and continuity corrections. Throws ValidationError when all differences
// vanish or fewer than 3 remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

// Holm step-down adjustment, returned in input order.
std::vector<double> holm_correction(std::span<const double> pvalues);

// values[method][dataset], higher is better.
struct ScoreMatrix {
  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> values;

  void validate() const;
};

// CSV form: header "method,<dataset>,...", then one row per method.
ScoreMatrix parse_score_matrix_csv(const std::string& text);
ScoreMatrix read_score_matrix_csv(const std::filesystem::path& path);

// Average ranks of `values` in descending order (rank 1 = largest), ties
// sharing their mean rank.
std::vector<double> rank_descending(std::span<const double> values);

// Per-method rank averaged over datasets.
std::vector<double> average_ranks(const ScoreMatrix& scores);

struct CdModel {
  std::vector<std::string> methods;
  std::vector<double> avg_ranks;
  // Symmetric [k][k]; the diagonal is 1.
  std::vector<std::vector<double>> raw_p;
  std::vector<std::vector<double>> adjusted_p;
  std::vector<std::vector<double>> statistic;
  double alpha = 0.10;
  // Method indices of each clique, in rank order.
  std::vector<std::vector<std::size_t>> cliques;
};

// Pairwise Wilcoxon tests, Holm over all pairs, average ranks and cliques.
CdModel build_cd_model(const ScoreMatrix& scores, double alpha = 0.10);

// Maximal rank-contiguous spans (in average-rank order) of at least two
// methods whose pairs all have adjusted p >= alpha; nested spans removed.
std::vector<std::vector<std::size_t>> compute_cliques(const CdModel& model);

// Methods ordered by average rank, ties by input order.
std::vector<std::size_t> rank_order(const CdModel& model);

// Deterministic SVG 1.1 critical-difference diagram.
std::string cd_svg(const CdModel& model);
void render_cd_svg(const CdModel& model, const std::filesystem::path& path);

}  // namespace hsseg
