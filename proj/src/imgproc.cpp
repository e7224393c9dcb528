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

#include "hsseg/imgproc.hpp"

#include <algorithm>
#include <cmath>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

void check_chw(const Tensor& t, const char* what) {
  if (t.rank() != 3) {
    throw ShapeError(std::string(what) + ": expected [C,H,W], got " + to_string(t.shape()));
  }
}

double source_coord(std::size_t dst, std::size_t in, std::size_t out) {
  const double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) /
                       static_cast<double>(out) - 0.5;
  return std::clamp(s, 0.0, static_cast<double>(in - 1));
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d <= 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d / 6.0 + 1.0, 1.0);
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double hh = (h - std::floor(h)) * 6.0;
  const int i = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace

Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  check_chw(image, "resize_bilinear");
  if (out_h == 0 || out_w == 0) throw ValidationError("resize_bilinear: zero target extent");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == out_h && w == out_w) return image;
  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = image.data() + ch * h * w;
    double* dst = out.data() + ch * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const double sy = source_coord(y, h, out_h);
      const auto y0 = static_cast<std::size_t>(sy);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t x = 0; x < out_w; ++x) {
        const double sx = source_coord(x, w, out_w);
        const auto x0 = static_cast<std::size_t>(sx);
        const std::size_t x1 = std::min(x0 + 1, w - 1);
        const double fx = sx - static_cast<double>(x0);
        const double top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
        const double bot = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
        dst[y * out_w + x] = top * (1.0 - fy) + bot * fy;
      }
    }
  }
  return out;
}

Tensor resize_nearest(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  check_chw(image, "resize_nearest");
  if (out_h == 0 || out_w == 0) throw ValidationError("resize_nearest: zero target extent");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == out_h && w == out_w) return image;
  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < out_h; ++y) {
      const std::size_t sy = std::min(h - 1, static_cast<std::size_t>((y + 0.5) * h / out_h));
      for (std::size_t x = 0; x < out_w; ++x) {
        const std::size_t sx = std::min(w - 1, static_cast<std::size_t>((x + 0.5) * w / out_w));
        out[(ch * out_h + y) * out_w + x] = image[(ch * h + sy) * w + sx];
      }
    }
  }
  return out;
}

Tensor crop(const Tensor& image, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
  check_chw(image, "crop");
  if (y0 + h > image.dim(1) || x0 + w > image.dim(2)) {
    throw ShapeError("crop window exceeds image " + to_string(image.shape()));
  }
  const std::size_t c = image.dim(0), iw = image.dim(2), ih = image.dim(1);
  Tensor out({c, h, w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < h; ++y) {
      const double* src = image.data() + (ch * ih + y0 + y) * iw + x0;
      std::copy(src, src + w, out.data() + (ch * h + y) * w);
    }
  }
  return out;
}

JitterFactors draw_jitter(Rng& rng, double strength) {
  JitterFactors f;
  f.brightness = rng.uniform(1.0 - strength, 1.0 + strength);
  f.contrast = rng.uniform(1.0 - strength, 1.0 + strength);
  f.saturation = rng.uniform(1.0 - strength, 1.0 + strength);
  f.hue = rng.uniform(-strength, strength);
  return f;
}

Tensor color_jitter(const Tensor& image, const JitterFactors& f) {
  check_chw(image, "color_jitter");
  if (image.dim(0) != 3) throw ShapeError("color_jitter: expected 3 channels");
  Tensor out = image;
  const std::size_t plane = image.dim(1) * image.dim(2);
  double* r = out.data();
  double* g = r + plane;
  double* b = g + plane;
  if (f.brightness != 1.0) {
    for (double& v : out.values()) v = std::clamp(v * f.brightness, 0.0, 1.0);
  }
  if (f.contrast != 1.0) {
    double mean = 0.0;
    for (std::size_t p = 0; p < plane; ++p) mean += luma(r[p], g[p], b[p]);
    mean /= static_cast<double>(plane);
    for (double& v : out.values()) v = std::clamp((v - mean) * f.contrast + mean, 0.0, 1.0);
  }
  if (f.saturation != 1.0) {
    for (std::size_t p = 0; p < plane; ++p) {
      const double gray = luma(r[p], g[p], b[p]);
      r[p] = std::clamp(gray + (r[p] - gray) * f.saturation, 0.0, 1.0);
      g[p] = std::clamp(gray + (g[p] - gray) * f.saturation, 0.0, 1.0);
      b[p] = std::clamp(gray + (b[p] - gray) * f.saturation, 0.0, 1.0);
    }
  }
  if (f.hue != 0.0) {
    for (std::size_t p = 0; p < plane; ++p) {
      double h, s, v;
      rgb_to_hsv(r[p], g[p], b[p], h, s, v);
      hsv_to_rgb(h + f.hue, s, v, r[p], g[p], b[p]);
    }
  }
  return out;
}

std::pair<Tensor, Tensor> augment(const Tensor& image, const Tensor& mask, Rng& rng,
                                  const AugmentConfig& cfg, AugmentTrace* trace) {
  check_chw(image, "augment");
  check_chw(mask, "augment mask");
  if (cfg.out_size > cfg.resize_to) throw ValidationError("augment: out_size > resize_to");
  Tensor img = resize_bilinear(image, cfg.resize_to, cfg.resize_to);
  Tensor msk = resize_nearest(mask, cfg.resize_to, cfg.resize_to);

  AugmentTrace t;
  const bool coin = rng.bernoulli(0.5);
  t.resized = cfg.force_resize.value_or(coin);
  if (t.resized) {
    img = resize_bilinear(img, cfg.out_size, cfg.out_size);
    msk = resize_nearest(msk, cfg.out_size, cfg.out_size);
  } else {
    const long slack = static_cast<long>(cfg.resize_to - cfg.out_size);
    t.crop_y = static_cast<std::size_t>(rng.uniform_int(0, slack));
    t.crop_x = static_cast<std::size_t>(rng.uniform_int(0, slack));
    img = crop(img, t.crop_y, t.crop_x, cfg.out_size, cfg.out_size);
    msk = crop(msk, t.crop_y, t.crop_x, cfg.out_size, cfg.out_size);
  }

  const bool strong = rng.bernoulli(0.5);
  t.jitter_strength = cfg.force_jitter.value_or(strong ? cfg.strong_jitter : cfg.weak_jitter);
  const JitterFactors f = draw_jitter(rng, t.jitter_strength);
  img = color_jitter(img, f);

  if (cfg.noise) {
    const double n = static_cast<double>(img.size());
    const double mean = img.sum() / n;
    double var = 0.0;
    for (double v : img.values()) var += (v - mean) * (v - mean);
    const double sigma = cfg.noise_std_fraction * std::sqrt(var / n);
    const std::size_t channels = img.dim(0);
    const std::size_t plane = img.dim(1) * img.dim(2);
    for (std::size_t p = 0; p < plane; ++p) {
      if (!rng.bernoulli(cfg.noise_pixel_prob)) continue;
      for (std::size_t ch = 0; ch < channels; ++ch) img[ch * plane + p] += sigma * rng.normal();
    }
  }
  if (trace) *trace = t;
  return {std::move(img), std::move(msk)};
}

Tensor lcn(const Tensor& image) {
  Tensor out(image.shape());
  const auto [lo, hi] = std::minmax_element(image.values().begin(), image.values().end());
  if (*lo == *hi) return out;  // the rounded mean of a constant may differ from it
  const double n = static_cast<double>(image.size());
  const double mean = image.sum() / n;
  double mad = 0.0;
  for (double v : image.values()) mad += std::abs(v - mean);
  mad /= n;
  const double denom = std::max(mad, 1e-8);
  for (std::size_t i = 0; i < image.size(); ++i) out[i] = (image[i] - mean) / denom;
  return out;
}

Tensor minmax(const Tensor& image) {
  const auto [lo, hi] = std::minmax_element(image.values().begin(), image.values().end());
  const double mn = *lo, range = *hi - *lo;
  Tensor out(image.shape());
  for (std::size_t i = 0; i < image.size(); ++i) {
    out[i] = range > 0.0 ? (image[i] - mn) / range : 0.5;
  }
  return out;
}

std::pair<Tensor, Tensor> preprocess_train(const Tensor& image, const Tensor& mask, Rng& rng,
                                           const AugmentConfig& cfg) {
  auto [img, msk] = augment(image, mask, rng, cfg);
  return {minmax(lcn(img)), std::move(msk)};
}

Tensor preprocess_test(const Tensor& image, std::size_t out_size) {
  return minmax(lcn(resize_bilinear(image, out_size, out_size)));
}

}  // namespace hsseg
