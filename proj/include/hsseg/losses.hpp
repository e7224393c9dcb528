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

#include <string>
#include <vector>

#include "hsseg/tensor.hpp"

namespace hsseg {

// Pseudo-Huber h(z) = sqrt(z^2 + 1) - 1 and its derivative z / sqrt(z^2 + 1).
double pseudo_huber(double z);
double pseudo_huber_grad(double z);
Tensor pseudo_huber(const Tensor& z);

// Push p(s) = -log(1 - exp(-s)) for s > 0, evaluated without cancellation at
// either end. Throws NumericalError for s <= 0 or NaN (p(0) is infinite).
double push(double s);
// p'(s) = -1 / (exp(s) - 1).
double push_grad(double s);

// Reference hypersphere losses on feature vectors [n, d].
// Mean squared distance to the center.
double loss_deep_svdd(const Tensor& features, const Tensor& center);
// Mean of h(phi - a) for normal samples and p(h(phi - a)) for anomalous ones,
// with the vector pseudo-Huber sqrt(|phi - a|^2 + 1) - 1.
double loss_hsc(const Tensor& features, const Tensor& center, const std::vector<int>& labels);

// Normal (J0) and anomalous (J1) (image, pixel) index pairs of a mask batch.
struct PixelIndexSets {
  struct Index {
    std::size_t image;
    std::size_t pixel;
  };
  std::vector<Index> normal;
  std::vector<Index> anomalous;
};

// masks: [n, ...] with {0,1} values. Throws ValidationError on other values.
PixelIndexSets pixel_index_sets(const Tensor& masks);

struct LossValue {
  double value = 0.0;
  Tensor grad;  // d(loss)/d(scores), same shape as the score map
};

// Score maps and masks share a shape [n, ...] with m pixels per image.
//
// Per-image pooled loss:
//   (1/n) sum_i [ (1/m) sum_j (1-Y_ij) A_ij + p((1/m) sum_j Y_ij A_ij) ]
// For an image without anomalous pixels the push term is omitted, since
// p(0) is infinite.
LossValue loss_fcdd_baseline(const Tensor& scores, const Tensor& masks);

// Per-pixel balanced loss:
//   (1/nm) sum_ij [ (1-Y_ij) A_ij + r Y_ij p(A_ij) ],  r = |J0| / |J1|
// r is 1 when `balance` is false or when |J0| = 0; the anomalous term is
// absent when |J1| = 0. Throws NumericalError when A_ij = 0 with Y_ij = 1.
LossValue loss_proposed(const Tensor& scores, const Tensor& masks, bool balance = true);

enum class LossVariant { baseline, proposed };
std::string loss_variant_name(LossVariant v);
LossVariant parse_loss_variant(const std::string& name);

LossValue training_loss(LossVariant variant, const Tensor& scores, const Tensor& masks);

}  // namespace hsseg
