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

#include "hsseg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

// Average ranks (1-based) of `values` in ascending order, doubled so that
// tied ranks stay integral.
std::vector<std::uint64_t> doubled_ranks_ascending(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<std::uint64_t> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j; twice their mean is i+1+j.
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = i + 1 + j;
    i = j;
  }
  return ranks;
}

double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw ValidationError("wilcoxon: samples differ in length (" + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()) + ")");
  }
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("wilcoxon: non-finite score");
    }
    if (x[i] - y[i] != 0.0) d.push_back(x[i] - y[i]);
  }
  if (d.empty()) throw ValidationError("wilcoxon: methods identical on every dataset");
  if (d.size() < 3) {
    throw ValidationError("wilcoxon: " + std::to_string(d.size()) +
                          " non-zero differences, at least 3 required");
  }
  std::vector<double> magnitude(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) magnitude[i] = std::abs(d[i]);
  const std::vector<std::uint64_t> r2 = doubled_ranks_ascending(magnitude);

  std::uint64_t plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    total2 += r2[i];
    if (d[i] > 0.0) plus2 += r2[i];
  }
  const std::uint64_t minus2 = total2 - plus2;
  const std::uint64_t w2 = std::min(plus2, minus2);

  WilcoxonResult r;
  r.n = d.size();
  r.w_plus = static_cast<double>(plus2) / 2.0;
  r.w_minus = static_cast<double>(minus2) / 2.0;
  r.statistic = static_cast<double>(w2) / 2.0;

  if (r.n <= kWilcoxonExactMax) {
    // counts[s]: sign assignments whose doubled positive rank sum is s.
    std::vector<std::uint64_t> counts(total2 + 1, 0);
    counts[0] = 1;
    std::uint64_t reach = 0;
    for (std::uint64_t rk : r2) {
      for (std::uint64_t s = reach + 1; s-- > 0;) {
        if (counts[s]) counts[s + rk] += counts[s];
      }
      reach += rk;
    }
    std::uint64_t extreme = 0;
    for (std::uint64_t s = 0; s <= total2; ++s) {
      if (std::min(s, total2 - s) <= w2) extreme += counts[s];
    }
    r.p_value = static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(r.n));
    r.exact = true;
  } else {
    const double n = static_cast<double>(r.n);
    const double mean = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // Tie correction: sum (t^3 - t) / 48 over tie groups.
    std::vector<std::uint64_t> sorted = r2;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    const double dev = std::max(0.0, std::abs(r.statistic - mean) - 0.5);
    r.p_value = var > 0.0 ? normal_two_sided(dev / std::sqrt(var)) : 1.0;
    r.exact = false;
  }
  r.p_value = std::min(1.0, r.p_value);
  return r;
}

std::vector<double> holm_correction(std::span<const double> pvalues) {
  const std::size_t m = pvalues.size();
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("holm: p value outside [0,1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled = static_cast<double>(m - i) * pvalues[order[i]];
    running = std::max(running, scaled);
    adjusted[order[i]] = std::min(1.0, running);
  }
  return adjusted;
}

void ScoreMatrix::validate() const {
  if (methods.size() < 2) throw ValidationError("score matrix needs at least 2 methods");
  if (datasets.size() < 3) throw ValidationError("score matrix needs at least 3 datasets");
  if (values.size() != methods.size()) throw ValidationError("score matrix: row count != methods");
  for (std::size_t m = 0; m < values.size(); ++m) {
    if (values[m].size() != datasets.size()) {
      throw ValidationError("score matrix: method " + methods[m] + " has " +
                            std::to_string(values[m].size()) + " entries for " +
                            std::to_string(datasets.size()) + " datasets");
    }
    for (double v : values[m]) {
      if (!std::isfinite(v)) throw ValidationError("score matrix: missing or non-finite entry");
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

ScoreMatrix parse_score_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ScoreMatrix m;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (header) {
      if (cells.size() < 2) throw ValidationError("score matrix: header needs datasets");
      m.datasets.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    if (cells.size() != m.datasets.size() + 1) {
      throw ValidationError("score matrix line " + std::to_string(lineno) + ": expected " +
                            std::to_string(m.datasets.size() + 1) + " fields");
    }
    m.methods.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[c].size()) {
        throw ValidationError("score matrix line " + std::to_string(lineno) + ": bad number '" + cells[c] + "'");
      }
      row.push_back(v);
    }
    m.values.push_back(std::move(row));
  }
  m.validate();
  return m;
}

ScoreMatrix read_score_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_score_matrix_csv(ss.str());
}

std::vector<double> rank_descending(std::span<const double> values) {
  std::vector<double> negated(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) negated[i] = -values[i];
  const auto r2 = doubled_ranks_ascending(negated);
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) ranks[i] = static_cast<double>(r2[i]) / 2.0;
  return ranks;
}

std::vector<double> average_ranks(const ScoreMatrix& scores) {
  scores.validate();
  const std::size_t k = scores.methods.size(), n = scores.datasets.size();
  std::vector<double> avg(k, 0.0);
  std::vector<double> column(k);
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t m = 0; m < k; ++m) column[m] = scores.values[m][d];
    const std::vector<double> r = rank_descending(column);
    for (std::size_t m = 0; m < k; ++m) avg[m] += r[m];
  }
  for (double& a : avg) a /= static_cast<double>(n);
  return avg;
}

std::vector<std::size_t> rank_order(const CdModel& model) {
  std::vector<std::size_t> order(model.methods.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return model.avg_ranks[a] < model.avg_ranks[b];
  });
  return order;
}

std::vector<std::vector<std::size_t>> compute_cliques(const CdModel& model) {
  const std::size_t k = model.methods.size();
  if (model.adjusted_p.size() != k) throw ValidationError("cd model: missing adjusted p values");
  for (const auto& row : model.adjusted_p) {
    if (row.size() != k) throw ValidationError("cd model: adjusted p matrix is not square");
  }
  const std::vector<std::size_t> order = rank_order(model);
  auto together = [&](std::size_t a, std::size_t b) {
    return model.adjusted_p[order[a]][order[b]] >= model.alpha;
  };
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i;
    while (j + 1 < k) {
      bool ok = true;
      for (std::size_t a = i; a <= j && ok; ++a) ok = together(a, j + 1);
      if (!ok) break;
      ++j;
    }
    if (j > i) spans.emplace_back(i, j);
  }
  std::vector<std::vector<std::size_t>> cliques;
  for (const auto& [lo, hi] : spans) {
    const bool nested = std::any_of(spans.begin(), spans.end(), [&](const auto& o) {
      return o != std::pair{lo, hi} && o.first <= lo && hi <= o.second;
    });
    if (nested) continue;
    std::vector<std::size_t> members;
    for (std::size_t a = lo; a <= hi; ++a) members.push_back(order[a]);
    cliques.push_back(std::move(members));
  }
  return cliques;
}

CdModel build_cd_model(const ScoreMatrix& scores, double alpha) {
  scores.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
  const std::size_t k = scores.methods.size();
  CdModel model;
  model.methods = scores.methods;
  model.alpha = alpha;
  model.avg_ranks = average_ranks(scores);
  model.raw_p.assign(k, std::vector<double>(k, 1.0));
  model.adjusted_p.assign(k, std::vector<double>(k, 1.0));
  model.statistic.assign(k, std::vector<double>(k, 0.0));

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> raw;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const WilcoxonResult w = wilcoxon_signed_rank(scores.values[a], scores.values[b]);
      pairs.emplace_back(a, b);
      raw.push_back(w.p_value);
      model.raw_p[a][b] = model.raw_p[b][a] = w.p_value;
      model.statistic[a][b] = model.statistic[b][a] = w.statistic;
    }
  }
  const std::vector<double> adjusted = holm_correction(raw);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [a, b] = pairs[i];
    model.adjusted_p[a][b] = model.adjusted_p[b][a] = adjusted[i];
  }
  model.cliques = compute_cliques(model);
  return model;
}

}  // namespace hsseg
