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

#include <span>

#include "hsseg/tensor.hpp"

namespace hsseg {

// Pixel-wise AUROC via the Mann-Whitney rank statistic with ties counted as
// 1/2, from a single sort. Labels are 0/1. Throws ValidationError unless both
// classes are present.
double pixel_auroc(std::span<const double> scores, std::span<const double> labels);

// Step-wise average precision: sum_k (R_k - R_{k-1}) P_k over descending
// distinct score thresholds, tied scores forming one threshold. Computed as
// sum_k (dTP_k / P) * TP_k / (TP_k + FP_k). Throws unless a positive exists.
double pixel_ap(std::span<const double> scores, std::span<const double> labels);

struct PixelScores {
  double auroc = 0.0;
  double ap = 0.0;
};

// Pools every pixel of the score maps (flatten order) and applies both metrics.
PixelScores category_scores(const Tensor& score_maps, const Tensor& masks);

}  // namespace hsseg
