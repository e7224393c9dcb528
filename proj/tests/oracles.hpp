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


// Brute-force reference computations used as test oracles. Deliberately
// quadratic or exponential; they share no code with the library.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace hsseg::testing {

// 2 * (pairs with positive above negative) + (tied pairs), over all pairs.
inline std::uint64_t doubled_pair_count(const std::vector<double>& s, const std::vector<double>& y) {
  std::uint64_t u2 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1.0) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0.0) continue;
      if (s[i] > s[j]) u2 += 2;
      if (s[i] == s[j]) u2 += 1;
    }
  }
  return u2;
}

inline double auroc_oracle(const std::vector<double>& s, const std::vector<double>& y) {
  const auto pos = static_cast<double>(std::count(y.begin(), y.end(), 1.0));
  const auto neg = static_cast<double>(y.size()) - pos;
  return static_cast<double>(doubled_pair_count(s, y)) / (2.0 * pos * neg);
}

// Threshold sweep: for each distinct score t, from high to low, count TP and
// FP among {s >= t} directly, and add (TP_t - TP_prev)/P * TP_t/(TP_t + FP_t).
inline double ap_oracle(const std::vector<double>& s, const std::vector<double>& y) {
  std::vector<double> thresholds = s;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  const auto p = static_cast<double>(std::count(y.begin(), y.end(), 1.0));
  double ap = 0.0;
  std::uint64_t tp_prev = 0;
  for (double t : thresholds) {
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= t) (y[i] == 1.0 ? tp : fp) += 1;
    }
    if (tp > tp_prev) {
      ap += (static_cast<double>(tp - tp_prev) / p) * (static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    tp_prev = tp;
  }
  return ap;
}

// Average ranks (1 = largest) by counting, ties sharing the mean position.
inline std::vector<double> descending_ranks_oracle(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double greater = 0, equal = 0;
    for (double w : v) {
      if (w > v[i]) ++greater;
      if (w == v[i]) ++equal;
    }
    r[i] = greater + (equal + 1.0) / 2.0;
  }
  return r;
}

struct SignedRankOracle {
  double w_plus = 0, w_minus = 0, statistic = 0, p_value = 1;
  std::size_t n = 0;
};

// Exact two-sided signed-rank test by listing all 2^n sign patterns.
inline SignedRankOracle signed_rank_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  SignedRankOracle o;
  o.n = d.size();
  // doubled average ranks of |d|, ascending
  std::vector<std::int64_t> r2(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::int64_t less = 0, equal = 0;
    for (double e : d) {
      if (std::abs(e) < std::abs(d[i])) ++less;
      if (std::abs(e) == std::abs(d[i])) ++equal;
    }
    r2[i] = 2 * less + equal + 1;
  }
  const std::int64_t total = std::accumulate(r2.begin(), r2.end(), std::int64_t{0});
  std::int64_t wp = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) wp += r2[i];
  }
  const std::int64_t w_obs = std::min(wp, total - wp);
  std::uint64_t hits = 0;
  const std::uint64_t patterns = std::uint64_t{1} << d.size();
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    std::int64_t w = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (mask >> i & 1U) w += r2[i];
    }
    if (std::min(w, total - w) <= w_obs) ++hits;
  }
  o.w_plus = static_cast<double>(wp) / 2.0;
  o.w_minus = static_cast<double>(total - wp) / 2.0;
  o.statistic = static_cast<double>(w_obs) / 2.0;
  o.p_value = static_cast<double>(hits) / static_cast<double>(patterns);
  return o;
}

}  // namespace hsseg::testing
