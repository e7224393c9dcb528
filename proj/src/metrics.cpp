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

#include "hsseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

struct Scored {
  double score;
  bool positive;
};

std::vector<Scored> sorted_pairs(std::span<const double> scores, std::span<const double> labels,
                                 std::size_t& positives) {
  if (scores.size() != labels.size()) {
    throw ValidationError("metrics: " + std::to_string(scores.size()) + " scores vs " +
                          std::to_string(labels.size()) + " labels");
  }
  std::vector<Scored> v(scores.size());
  positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) throw ValidationError("metrics: NaN score at " + std::to_string(i));
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw ValidationError("metrics: labels must be 0 or 1");
    }
    v[i] = {scores[i], labels[i] == 1.0};
    positives += v[i].positive;
  }
  std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
  return v;
}

}  // namespace

double pixel_auroc(std::span<const double> scores, std::span<const double> labels) {
  std::size_t positives = 0;
  const std::vector<Scored> v = sorted_pairs(scores, labels, positives);
  const std::size_t negatives = v.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw ValidationError("pixel_auroc: labels contain a single class (" +
                          std::to_string(positives) + " positive, " + std::to_string(negatives) +
                          " negative)");
  }
  // Twice the Mann-Whitney U, in integers: a positive beats every lower
  // negative (2) and ties each equal one (1).
  std::uint64_t u2 = 0;
  std::uint64_t negatives_below = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0, neg = 0;
    while (j < v.size() && v[j].score == v[i].score) {
      (v[j].positive ? pos : neg) += 1;
      ++j;
    }
    u2 += pos * (2 * negatives_below + neg);
    negatives_below += neg;
    i = j;
  }
  return static_cast<double>(u2) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

double pixel_ap(std::span<const double> scores, std::span<const double> labels) {
  std::size_t positives = 0;
  const std::vector<Scored> v = sorted_pairs(scores, labels, positives);
  if (positives == 0) throw ValidationError("pixel_ap: no positive labels");
  const double p = static_cast<double>(positives);
  double ap = 0.0;
  std::uint64_t tp = 0, fp = 0;
  // Walk thresholds from the highest score down.
  for (std::size_t end = v.size(); end > 0;) {
    std::size_t begin = end;
    std::uint64_t dtp = 0;
    while (begin > 0 && v[begin - 1].score == v[end - 1].score) {
      --begin;
      if (v[begin].positive) {
        ++dtp;
      } else {
        ++fp;
      }
    }
    tp += dtp;
    if (dtp > 0) {
      ap += (static_cast<double>(dtp) / p) *
            (static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    end = begin;
  }
  return ap;
}

PixelScores category_scores(const Tensor& score_maps, const Tensor& masks) {
  require_shape(masks, score_maps.shape(), "category_scores masks");
  return {pixel_auroc(score_maps.values(), masks.values()),
          pixel_ap(score_maps.values(), masks.values())};
}

}  // namespace hsseg
