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

#include <optional>
#include <utility>

#include "hsseg/rng.hpp"
#include "hsseg/tensor.hpp"

namespace hsseg {

// Bilinear resize of a [C,H,W] tensor with half-pixel centers:
// src = (dst + 0.5) * in/out - 0.5, clamped to the valid range.
Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w);
// Nearest-neighbour resize with the same alignment; used for masks.
Tensor resize_nearest(const Tensor& image, std::size_t out_h, std::size_t out_w);
Tensor crop(const Tensor& image, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w);

// Brightness, contrast and saturation factors are multiplicative, the hue shift
// is additive in turns. Factors equal to 1 and a zero hue shift are skipped.
struct JitterFactors {
  double brightness = 1.0;
  double contrast = 1.0;
  double saturation = 1.0;
  double hue = 0.0;
};
JitterFactors draw_jitter(Rng& rng, double strength);
Tensor color_jitter(const Tensor& image, const JitterFactors& f);

struct AugmentConfig {
  std::size_t resize_to = 69;
  std::size_t out_size = 64;
  double strong_jitter = 0.04;
  double weak_jitter = 0.0005;
  bool noise = true;
  double noise_std_fraction = 0.1;
  double noise_pixel_prob = 0.5;
  // Test hooks: pin the resize-vs-crop coin or the jitter strength.
  std::optional<bool> force_resize;
  std::optional<double> force_jitter;
};

struct AugmentTrace {
  bool resized = false;
  std::size_t crop_y = 0, crop_x = 0;
  double jitter_strength = 0.0;
};

// Training augmentation chain (before lcn/minmax). Masks only follow the
// geometric steps.
std::pair<Tensor, Tensor> augment(const Tensor& image, const Tensor& mask, Rng& rng,
                                  const AugmentConfig& cfg = {}, AugmentTrace* trace = nullptr);

// Global per-image normalization with channels pooled: (x - mean) / max(MAD, 1e-8).
Tensor lcn(const Tensor& image);
// (x - min) / (max - min); constant images map to 0.5.
Tensor minmax(const Tensor& image);

// augment -> lcn -> minmax.
std::pair<Tensor, Tensor> preprocess_train(const Tensor& image, const Tensor& mask, Rng& rng,
                                           const AugmentConfig& cfg = {});
// resize -> lcn -> minmax.
Tensor preprocess_test(const Tensor& image, std::size_t out_size = 64);

}  // namespace hsseg
