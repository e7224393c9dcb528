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

#include "hsseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

constexpr double kPi = std::numbers::pi;

struct CategoryRow {
  Family family;
  int scale;
  int orientation;
  Rgb a, b;
  double noise;
};

// clang-format off
constexpr std::array<CategoryRow, kNumCategories> kCategoryTable{{
    {Family::stripes,  8,  0, {0.85, 0.75, 0.35}, {0.35, 0.25, 0.15}, 0.04},
    {Family::checker,  8,  0, {0.90, 0.90, 0.90}, {0.20, 0.20, 0.25}, 0.03},
    {Family::blobs,    6,  0, {0.30, 0.60, 0.30}, {0.10, 0.20, 0.10}, 0.05},
    {Family::cells,   12,  0, {0.75, 0.55, 0.45}, {0.50, 0.35, 0.30}, 0.03},
    {Family::gradient, 2,  0, {0.20, 0.40, 0.80}, {0.60, 0.80, 0.95}, 0.02},
    {Family::stripes, 12,  2, {0.60, 0.20, 0.20}, {0.95, 0.60, 0.50}, 0.05},
    {Family::checker, 12,  0, {0.50, 0.45, 0.20}, {0.80, 0.75, 0.50}, 0.04},
    {Family::blobs,   10,  0, {0.90, 0.80, 0.60}, {0.55, 0.40, 0.30}, 0.04},
    {Family::cells,   20,  0, {0.35, 0.35, 0.45}, {0.15, 0.15, 0.20}, 0.03},
    {Family::gradient, 4,  1, {0.95, 0.85, 0.70}, {0.70, 0.50, 0.35}, 0.02},
}};
// clang-format on

std::size_t plane_of(const Tensor& image) { return image.dim(1) * image.dim(2); }

void check_image(const Tensor& image, const char* what) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError(std::string(what) + ": expected image [3,H,W], got " +
                     to_string(image.shape()));
  }
}

// Additive shift that stays inside [0,1]: reflects to -shift when +shift would overflow.
double shifted(double v, double shift) {
  double r = v + shift;
  if (r > 1.0 || r < 0.0) r = v - shift;
  return std::clamp(r, 0.0, 1.0);
}

Rgb random_shift(Rng& rng) {
  Rgb s{};
  for (double& c : s) {
    const double mag = rng.uniform(0.25, 0.5);
    c = rng.bernoulli(0.5) ? mag : -mag;
  }
  return s;
}

}  // namespace

std::string family_name(Family family) {
  switch (family) {
    case Family::stripes: return "stripes";
    case Family::checker: return "checker";
    case Family::blobs: return "blobs";
    case Family::cells: return "cells";
    case Family::gradient: return "gradient";
  }
  return "unknown";
}

std::string CategorySpec::name() const {
  return "c" + std::to_string(category_id) + "_" + family_name(family);
}

CategorySpec make_category(int category_id, std::size_t image_size) {
  if (category_id < 0 || category_id >= kNumCategories) {
    throw ValidationError("category id " + std::to_string(category_id) + " outside [0," +
                          std::to_string(kNumCategories - 1) + "]");
  }
  if (image_size < 8) throw ValidationError("image_size must be at least 8");
  const CategoryRow& row = kCategoryTable[static_cast<std::size_t>(category_id)];
  CategorySpec spec;
  spec.category_id = category_id;
  spec.family = row.family;
  spec.image_size = image_size;
  spec.scale = row.scale;
  spec.orientation = row.orientation;
  spec.color_a = row.a;
  spec.color_b = row.b;
  spec.noise_amplitude = row.noise;
  return spec;
}

Tensor gen_normal_image(const CategorySpec& spec, const Rng& base, std::uint64_t index) {
  Rng rng = base.substream("normal", static_cast<std::uint64_t>(spec.category_id), index);
  const std::size_t n = spec.image_size;
  const double size = static_cast<double>(n);
  std::vector<double> weight(n * n);

  switch (spec.family) {
    case Family::stripes: {
      const long period = std::max(spec.scale, 2);
      const long phase = rng.uniform_int(0, period - 1);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          long u = 0;
          switch (spec.orientation) {
            case 0: u = static_cast<long>(x); break;
            case 1: u = static_cast<long>(y); break;
            case 2: u = static_cast<long>(x + y); break;
            default: u = static_cast<long>(x + (n - 1 - y)); break;
          }
          const long t = (u + phase) % period;
          weight[y * n + x] = 0.5 + 0.5 * std::cos(2.0 * kPi * static_cast<double>(t) /
                                                   static_cast<double>(period));
        }
      }
      break;
    }
    case Family::checker: {
      const long cell = std::max(spec.scale, 2);
      const long ox = rng.uniform_int(0, cell - 1);
      const long oy = rng.uniform_int(0, cell - 1);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          const long parity = ((static_cast<long>(x) + ox) / cell + (static_cast<long>(y) + oy) / cell) % 2;
          weight[y * n + x] = parity == 0 ? 1.0 : 0.0;
        }
      }
      break;
    }
    case Family::blobs: {
      const long count = rng.uniform_int(4, 8);
      struct Blob { double x, y, r; };
      std::vector<Blob> blobs;
      for (long k = 0; k < count; ++k) {
        const double bx = rng.uniform(0.0, size);
        const double by = rng.uniform(0.0, size);
        const double r = spec.scale * rng.uniform(0.8, 1.2);
        blobs.push_back({bx, by, r});
      }
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          double w = 0.0;
          for (const Blob& b : blobs) {
            const double dx = x + 0.5 - b.x, dy = y + 0.5 - b.y;
            w = std::max(w, std::exp(-(dx * dx + dy * dy) / (2.0 * b.r * b.r)));
          }
          weight[y * n + x] = w;
        }
      }
      break;
    }
    case Family::cells: {
      struct Seed { double x, y, tone; };
      std::vector<Seed> seeds;
      for (int k = 0; k < spec.scale; ++k) {
        const double sx = rng.uniform(0.0, size);
        const double sy = rng.uniform(0.0, size);
        seeds.push_back({sx, sy, rng.uniform()});
      }
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          double d1 = 1e300, d2 = 1e300;
          double tone = 0.0;
          for (const Seed& s : seeds) {
            const double dx = x + 0.5 - s.x, dy = y + 0.5 - s.y;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d < d1) {
              d2 = d1;
              d1 = d;
              tone = s.tone;
            } else if (d < d2) {
              d2 = d;
            }
          }
          // Cell borders are drawn darker than any interior tone.
          weight[y * n + x] = (d2 - d1 < 1.5) ? -0.4 : tone;
        }
      }
      break;
    }
    case Family::gradient: {
      const double theta = spec.orientation * kPi / 4.0 + rng.uniform(-0.3, 0.3);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      const double c = std::cos(theta), s = std::sin(theta);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          const double px = (x + 0.5) / size - 0.5, py = (y + 0.5) / size - 0.5;
          const double u = px * c + py * s + 0.5;
          const double v = -px * s + py * c;
          weight[y * n + x] = std::clamp(u + 0.08 * std::sin(2.0 * kPi * spec.scale * v + phase), 0.0, 1.0);
        }
      }
      break;
    }
  }

  Tensor image({3, n, n});
  const std::size_t plane = n * n;
  for (std::size_t p = 0; p < plane; ++p) {
    const double w = weight[p];
    for (std::size_t ch = 0; ch < 3; ++ch) {
      double v = spec.color_a[ch] * w + spec.color_b[ch] * (1.0 - w);
      if (spec.noise_amplitude > 0.0) {
        v += rng.uniform(-spec.noise_amplitude, spec.noise_amplitude);
      }
      image[ch * plane + p] = std::clamp(v, 0.0, 1.0);
    }
  }
  return image;
}

void paint_square(Tensor& image, Tensor& mask, long x0, long y0, std::size_t side,
                  const Rgb& color) {
  const long h = static_cast<long>(image.dim(1)), w = static_cast<long>(image.dim(2));
  const std::size_t plane = plane_of(image);
  const long s = static_cast<long>(side);
  for (long y = std::max(0L, y0); y < std::min(h, y0 + s); ++y) {
    for (long x = std::max(0L, x0); x < std::min(w, x0 + s); ++x) {
      const std::size_t p = static_cast<std::size_t>(y * w + x);
      for (std::size_t ch = 0; ch < 3; ++ch) image[ch * plane + p] = color[ch];
      mask[p] = 1.0;
    }
  }
}

AnomalyResult confetti_apply(const Tensor& image, Rng& rng, const ConfettiConfig& cfg) {
  check_image(image, "confetti_apply");
  const std::size_t h = image.dim(1), w = image.dim(2);
  const std::size_t max_size = cfg.max_size == 0 ? h / 4 : cfg.max_size;
  if (cfg.min_count < 0 || cfg.max_count < cfg.min_count) {
    throw ValidationError("confetti: invalid count range [" + std::to_string(cfg.min_count) +
                          "," + std::to_string(cfg.max_count) + "]");
  }
  if (cfg.min_size < 1 || max_size < cfg.min_size) {
    throw ValidationError("confetti: invalid size range [" + std::to_string(cfg.min_size) + "," +
                          std::to_string(max_size) + "]");
  }
  if (max_size > std::min(h, w)) {
    throw ValidationError("confetti: max square size " + std::to_string(max_size) +
                          " exceeds image extent " + std::to_string(std::min(h, w)));
  }
  AnomalyResult r{image, Tensor({1, h, w})};
  const long count = rng.uniform_int(cfg.min_count, cfg.max_count);
  for (long k = 0; k < count; ++k) {
    const auto side = static_cast<std::size_t>(rng.uniform_int(
        static_cast<long>(cfg.min_size), static_cast<long>(max_size)));
    const long cx = rng.uniform_int(0, static_cast<long>(w) - 1);
    const long cy = rng.uniform_int(0, static_cast<long>(h) - 1);
    Rgb color{};
    for (double& c : color) c = rng.uniform();
    const long half = static_cast<long>(side) / 2;
    paint_square(r.image, r.mask, cx - half, cy - half, side, color);
  }
  return r;
}

std::string anomaly_type_name(AnomalyType type) {
  return type == AnomalyType::ellipse ? "ellipse" : "stroke";
}

AnomalyType parse_anomaly_type(const std::string& name) {
  if (name == "ellipse") return AnomalyType::ellipse;
  if (name == "stroke") return AnomalyType::stroke;
  throw ValidationError("unknown anomaly type '" + name + "'");
}

void stamp_ellipse(Tensor& image, Tensor& mask, double cx, double cy, double a, double b,
                   double theta, const Rgb& shift) {
  const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = (dx * c + dy * s) / a;
      const double v = (-dx * s + dy * c) / b;
      if (u * u + v * v > 1.0) continue;
      const std::size_t p = y * w + x;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        image[ch * plane + p] = shifted(image[ch * plane + p], shift[ch]);
      }
      mask[p] = 1.0;
    }
  }
}

void stamp_stroke(Tensor& image, Tensor& mask, double x0, double y0, double x1, double y1,
                  double thickness, const Rgb& shift) {
  const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
  const double ex = x1 - x0, ey = y1 - y0;
  const double len2 = ex * ex + ey * ey;
  const double r = thickness / 2.0;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double px = x + 0.5 - x0, py = y + 0.5 - y0;
      const double t = len2 > 0.0 ? std::clamp((px * ex + py * ey) / len2, 0.0, 1.0) : 0.0;
      const double dx = px - t * ex, dy = py - t * ey;
      if (dx * dx + dy * dy > r * r) continue;
      const std::size_t p = y * w + x;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        image[ch * plane + p] = shifted(image[ch * plane + p], shift[ch]);
      }
      mask[p] = 1.0;
    }
  }
}

AnomalyResult stamp_test_anomaly(const Tensor& image, Rng& rng, const StampConfig& cfg) {
  check_image(image, "stamp_test_anomaly");
  if (cfg.min_count < 0 || cfg.max_count < cfg.min_count) {
    throw ValidationError("stamp: invalid count range");
  }
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (std::min(h, w) < 24) throw ValidationError("stamp: image smaller than 24 pixels");
  const double hd = static_cast<double>(h), wd = static_cast<double>(w);
  AnomalyResult r{image, Tensor({1, h, w})};
  const long count = rng.uniform_int(cfg.min_count, cfg.max_count);
  for (long k = 0; k < count; ++k) {
    const Rgb shift = random_shift(rng);
    if (cfg.type == AnomalyType::ellipse) {
      const double max_axis = std::max(4.0, std::min(hd, wd) / 8.0);
      const double a = rng.uniform(4.0, max_axis);
      const double b = rng.uniform(4.0, max_axis);
      const double theta = rng.uniform(0.0, kPi);
      const double margin = std::max(a, b) + 1.0;
      const double cx = rng.uniform(margin, wd - margin);
      const double cy = rng.uniform(margin, hd - margin);
      stamp_ellipse(r.image, r.mask, cx, cy, a, b, theta, shift);
    } else {
      // Angles are kept 20..70 degrees away from the axes so a stroke is never
      // an axis-aligned rectangle.
      const double angle = rng.uniform(20.0, 70.0) * kPi / 180.0 +
                           static_cast<double>(rng.uniform_int(0, 3)) * kPi / 2.0;
      const double length = rng.uniform(12.0, std::max(12.0, std::min(hd, wd) / 3.0));
      const double thickness = rng.uniform(2.0, 4.0);
      const double margin = length / 2.0 + thickness;
      const double cx = rng.uniform(margin, wd - margin);
      const double cy = rng.uniform(margin, hd - margin);
      const double dx = std::cos(angle) * length / 2.0, dy = std::sin(angle) * length / 2.0;
      stamp_stroke(r.image, r.mask, cx - dx, cy - dy, cx + dx, cy + dy, thickness, shift);
    }
  }
  return r;
}

}  // namespace hsseg
