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

#include "hsseg/heatmap.hpp"

#include <cmath>
#include <vector>

#include "hsseg/error.hpp"
#include "hsseg/losses.hpp"

namespace hsseg {

namespace {

struct UpsampleGeometry {
  std::size_t n, h, w, f, out_h, out_w, ksize;
  std::vector<double> kernel;
  std::vector<double> inv_mass;  // out_h * out_w
};

UpsampleGeometry geometry(std::size_t n, std::size_t h, std::size_t w, std::size_t f) {
  if (f < 1) throw ValidationError("upsample factor must be >= 1");
  UpsampleGeometry g{n, h, w, f, h * f, w * f, 2 * f + 1, {}, {}};
  const Tensor k = gaussian_kernel(f);
  g.kernel.assign(k.values().begin(), k.values().end());
  std::vector<double> mass(g.out_h * g.out_w, 0.0);
  const long r = static_cast<long>(f);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const long cy = static_cast<long>(y * f + f / 2), cx = static_cast<long>(x * f + f / 2);
      for (long dy = -r; dy <= r; ++dy) {
        const long oy = cy + dy;
        if (oy < 0 || oy >= static_cast<long>(g.out_h)) continue;
        for (long dx = -r; dx <= r; ++dx) {
          const long ox = cx + dx;
          if (ox < 0 || ox >= static_cast<long>(g.out_w)) continue;
          mass[static_cast<std::size_t>(oy) * g.out_w + static_cast<std::size_t>(ox)] +=
              g.kernel[static_cast<std::size_t>((dy + r) * static_cast<long>(g.ksize) + dx + r)];
        }
      }
    }
  }
  g.inv_mass.resize(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) g.inv_mass[i] = 1.0 / mass[i];
  return g;
}

void check_low(const Tensor& t, const char* what) {
  if (t.rank() != 4 || t.dim(1) != 1) {
    throw ShapeError(std::string(what) + ": expected [n,1,h,w], got " + to_string(t.shape()));
  }
}

}  // namespace

Tensor gaussian_kernel(std::size_t factor) {
  if (factor < 1) throw ValidationError("gaussian_kernel: factor must be >= 1");
  const std::size_t size = 2 * factor + 1;
  const double sigma = static_cast<double>(factor) / 2.0;
  const long r = static_cast<long>(factor);
  Tensor k({size, size});
  for (long dy = -r; dy <= r; ++dy) {
    for (long dx = -r; dx <= r; ++dx) {
      k[static_cast<std::size_t>((dy + r) * static_cast<long>(size) + dx + r)] =
          std::exp(-static_cast<double>(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }
  return k;
}

Tensor gaussian_upsample(const Tensor& low, std::size_t factor) {
  check_low(low, "gaussian_upsample");
  const UpsampleGeometry g = geometry(low.dim(0), low.dim(2), low.dim(3), factor);
  Tensor out({g.n, 1, g.out_h, g.out_w});
  const long r = static_cast<long>(g.f);
  const long batch = static_cast<long>(g.n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < batch; ++i) {
    const double* src = low.data() + static_cast<std::size_t>(i) * g.h * g.w;
    double* dst = out.data() + static_cast<std::size_t>(i) * g.out_h * g.out_w;
    for (std::size_t y = 0; y < g.h; ++y) {
      for (std::size_t x = 0; x < g.w; ++x) {
        const double v = src[y * g.w + x];
        const long cy = static_cast<long>(y * g.f + g.f / 2), cx = static_cast<long>(x * g.f + g.f / 2);
        for (long dy = -r; dy <= r; ++dy) {
          const long oy = cy + dy;
          if (oy < 0 || oy >= static_cast<long>(g.out_h)) continue;
          const double* krow = g.kernel.data() + (dy + r) * static_cast<long>(g.ksize) + r;
          double* orow = dst + oy * static_cast<long>(g.out_w);
          for (long dx = -r; dx <= r; ++dx) {
            const long ox = cx + dx;
            if (ox < 0 || ox >= static_cast<long>(g.out_w)) continue;
            orow[ox] += krow[dx] * v;
          }
        }
      }
    }
    for (std::size_t p = 0; p < g.out_h * g.out_w; ++p) dst[p] *= g.inv_mass[p];
  }
  return out;
}

Tensor gaussian_upsample_backward(const Tensor& grad_high, std::size_t factor) {
  check_low(grad_high, "gaussian_upsample_backward");
  if (grad_high.dim(2) % factor != 0 || grad_high.dim(3) % factor != 0) {
    throw ShapeError("gaussian_upsample_backward: extent not divisible by factor");
  }
  const UpsampleGeometry g =
      geometry(grad_high.dim(0), grad_high.dim(2) / factor, grad_high.dim(3) / factor, factor);
  Tensor grad_low({g.n, 1, g.h, g.w});
  const long r = static_cast<long>(g.f);
  const long batch = static_cast<long>(g.n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < batch; ++i) {
    const double* gh = grad_high.data() + static_cast<std::size_t>(i) * g.out_h * g.out_w;
    double* gl = grad_low.data() + static_cast<std::size_t>(i) * g.h * g.w;
    for (std::size_t y = 0; y < g.h; ++y) {
      for (std::size_t x = 0; x < g.w; ++x) {
        const long cy = static_cast<long>(y * g.f + g.f / 2), cx = static_cast<long>(x * g.f + g.f / 2);
        double acc = 0.0;
        for (long dy = -r; dy <= r; ++dy) {
          const long oy = cy + dy;
          if (oy < 0 || oy >= static_cast<long>(g.out_h)) continue;
          const double* krow = g.kernel.data() + (dy + r) * static_cast<long>(g.ksize) + r;
          for (long dx = -r; dx <= r; ++dx) {
            const long ox = cx + dx;
            if (ox < 0 || ox >= static_cast<long>(g.out_w)) continue;
            const std::size_t p = static_cast<std::size_t>(oy) * g.out_w + static_cast<std::size_t>(ox);
            acc += krow[dx] * gh[p] * g.inv_mass[p];
          }
        }
        gl[y * g.w + x] = acc;
      }
    }
  }
  return grad_low;
}

ScoreMapPass score_map_cached(const FcnParams& params, const Tensor& images) {
  ScoreMapPass pass;
  pass.net = forward_cached(params, images);
  pass.scores = gaussian_upsample(pseudo_huber(pass.net.out), kDownsample);
  return pass;
}

Tensor score_map(const FcnParams& params, const Tensor& images) {
  return gaussian_upsample(pseudo_huber(forward(params, images)), kDownsample);
}

FcnParams score_map_backward(const FcnParams& params, const ScoreMapPass& pass,
                             const Tensor& grad_scores) {
  require_shape(grad_scores, pass.scores.shape(), "score map gradient");
  Tensor grad_low = gaussian_upsample_backward(grad_scores, kDownsample);
  for (std::size_t k = 0; k < grad_low.size(); ++k) {
    grad_low[k] *= pseudo_huber_grad(pass.net.out[k]);
  }
  return backward(params, pass.net, grad_low);
}

}  // namespace hsseg
