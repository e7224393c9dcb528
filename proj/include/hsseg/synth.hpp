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

#include <array>
#include <cstdint>
#include <string>

#include "hsseg/rng.hpp"
#include "hsseg/tensor.hpp"

namespace hsseg {

enum class Family { stripes, checker, blobs, cells, gradient };

std::string family_name(Family family);

using Rgb = std::array<double, 3>;

// Procedural stand-in for one object/texture category.
struct CategorySpec {
  int category_id = 0;
  Family family = Family::stripes;
  std::size_t image_size = 64;
  int scale = 8;        // stripe period, checker cell, blob radius, cell count, gradient waves
  int orientation = 0;  // 0 vertical, 1 horizontal, 2 diagonal, 3 anti-diagonal
  Rgb color_a{};
  Rgb color_b{};
  double noise_amplitude = 0.0;

  std::string name() const;
};

constexpr int kNumCategories = 10;

// Category table for ids 0..9.
CategorySpec make_category(int category_id, std::size_t image_size = 64);

// Normal image [3,H,W] in [0,1], a pure function of (spec, rng.seed(), index).
Tensor gen_normal_image(const CategorySpec& spec, const Rng& rng, std::uint64_t index);

struct AnomalyResult {
  Tensor image;
  Tensor mask;  // [1,H,W], {0,1}
};

struct ConfettiConfig {
  int min_count = 1;
  int max_count = 4;
  std::size_t min_size = 2;
  std::size_t max_size = 0;  // 0 means H/4
};

// Overwrites the clipped square with `color` and marks it in `mask`.
void paint_square(Tensor& image, Tensor& mask, long x0, long y0, std::size_t side,
                  const Rgb& color);

// Superposes randomly sized, placed and colored squares. Borders are not
// smoothed; squares may overlap and are clipped at the image border.
AnomalyResult confetti_apply(const Tensor& image, Rng& rng, const ConfettiConfig& cfg = {});

// Test-time anomaly shapes. Neither family produces axis-aligned rectangles.
enum class AnomalyType { ellipse, stroke };
constexpr int kNumAnomalyTypes = 2;

std::string anomaly_type_name(AnomalyType type);
AnomalyType parse_anomaly_type(const std::string& name);

struct StampConfig {
  AnomalyType type = AnomalyType::ellipse;
  int min_count = 1;
  int max_count = 2;
};

// Additive color shift inside a rotated ellipse with semi-axes (a, b).
void stamp_ellipse(Tensor& image, Tensor& mask, double cx, double cy, double a, double b,
                   double theta, const Rgb& shift);
// Additive color shift inside a capsule of the given thickness around a segment.
void stamp_stroke(Tensor& image, Tensor& mask, double x0, double y0, double x1, double y1,
                  double thickness, const Rgb& shift);

AnomalyResult stamp_test_anomaly(const Tensor& image, Rng& rng, const StampConfig& cfg = {});

}  // namespace hsseg
