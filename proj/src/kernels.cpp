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

#include "hsseg/kernels.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

// col is (C*k*k) x (Ho*Wo), row-major.
void im2col(const double* image, const ConvGeometry& g, const ConvSpec& spec, double* col) {
  const std::size_t k = g.kernel;
  const std::size_t plane = g.out_height * g.out_width;
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const double* src = image + c * g.height * g.width;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        double* row = col + ((c * k + ky) * k + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const long iy = static_cast<long>(oy * spec.stride + ky) - static_cast<long>(spec.padding);
          double* dst = row + oy * g.out_width;
          if (iy < 0 || iy >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_width, 0.0);
            continue;
          }
          const double* src_row = src + static_cast<std::size_t>(iy) * g.width;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const long ix =
                static_cast<long>(ox * spec.stride + kx) - static_cast<long>(spec.padding);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? 0.0 : src_row[ix];
          }
        }
      }
    }
  }
}

// Accumulates the rows of `col` belonging to channel c into one input plane.
void col2im_channel(const double* col, const ConvGeometry& g, const ConvSpec& spec,
                    std::size_t c, double* plane_out) {
  const std::size_t k = g.kernel;
  const std::size_t plane = g.out_height * g.out_width;
  for (std::size_t ky = 0; ky < k; ++ky) {
    for (std::size_t kx = 0; kx < k; ++kx) {
      const double* row = col + ((c * k + ky) * k + kx) * plane;
      for (std::size_t oy = 0; oy < g.out_height; ++oy) {
        const long iy = static_cast<long>(oy * spec.stride + ky) - static_cast<long>(spec.padding);
        if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
        double* dst_row = plane_out + static_cast<std::size_t>(iy) * g.width;
        const double* src = row + oy * g.out_width;
        for (std::size_t ox = 0; ox < g.out_width; ++ox) {
          const long ix =
              static_cast<long>(ox * spec.stride + kx) - static_cast<long>(spec.padding);
          if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
          dst_row[ix] += src[ox];
        }
      }
    }
  }
}

Tensor::Shape output_shape(const ConvGeometry& g) {
  if (g.batched) return {g.batch, g.out_channels, g.out_height, g.out_width};
  return {g.out_channels, g.out_height, g.out_width};
}

void check_pool_input(const Tensor& input) {
  if (input.rank() != 3 && input.rank() != 4) {
    throw ShapeError("maxpool2: expected rank 3 or 4 input, got " + to_string(input.shape()));
  }
  const std::size_t h = input.dim(input.rank() - 2);
  const std::size_t w = input.dim(input.rank() - 1);
  if (h % 2 != 0) throw ShapeError("maxpool2: height " + std::to_string(h) + " is odd");
  if (w % 2 != 0) throw ShapeError("maxpool2: width " + std::to_string(w) + " is odd");
}

Tensor::Shape pooled_shape(const Tensor& input) {
  Tensor::Shape s = input.shape();
  s[s.size() - 2] /= 2;
  s[s.size() - 1] /= 2;
  return s;
}

}  // namespace

std::size_t ConvSpec::output_extent(std::size_t input) const {
  const long span = static_cast<long>(input + 2 * padding) - static_cast<long>(kernel_size);
  if (span < 0 || stride == 0) {
    throw ShapeError("conv: input extent " + std::to_string(input) + " too small for kernel " +
                     std::to_string(kernel_size) + " with padding " + std::to_string(padding));
  }
  return static_cast<std::size_t>(span) / stride + 1;
}

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weights, const ConvSpec& spec) {
  if (spec.kernel_size % 2 == 0) {
    throw ShapeError("conv: kernel_size " + std::to_string(spec.kernel_size) + " is not odd");
  }
  if (spec.stride == 0) throw ShapeError("conv: stride must be positive");
  ConvGeometry g{};
  if (input.rank() == 4) {
    g.batched = true;
    g.batch = input.dim(0);
    g.in_channels = input.dim(1);
    g.height = input.dim(2);
    g.width = input.dim(3);
  } else if (input.rank() == 3) {
    g.batched = false;
    g.batch = 1;
    g.in_channels = input.dim(0);
    g.height = input.dim(1);
    g.width = input.dim(2);
  } else {
    throw ShapeError("conv: input rank must be 3 or 4, got " + to_string(input.shape()));
  }
  if (g.in_channels != spec.in_channels) {
    throw ShapeError("conv: input channels " + std::to_string(g.in_channels) +
                     " != spec.in_channels " + std::to_string(spec.in_channels));
  }
  const Tensor::Shape wshape{spec.out_channels, spec.in_channels, spec.kernel_size,
                             spec.kernel_size};
  if (weights.shape() != wshape) {
    throw ShapeError("conv: weights shape " + to_string(weights.shape()) + " != expected " +
                     to_string(wshape) + " (out_channels, in_channels, kernel, kernel)");
  }
  g.out_channels = spec.out_channels;
  g.kernel = spec.kernel_size;
  g.out_height = spec.output_extent(g.height);
  g.out_width = spec.output_extent(g.width);
  return g;
}

void check_bias(const Tensor& bias, const ConvSpec& spec) {
  if (bias.shape() != Tensor::Shape{spec.out_channels}) {
    throw ShapeError("conv: bias shape " + to_string(bias.shape()) + " != [" +
                     std::to_string(spec.out_channels) + "] (out_channels)");
  }
}

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              const ConvSpec& spec) {
  const ConvGeometry g = conv_geometry(input, weights, spec);
  check_bias(bias, spec);
  Tensor out(output_shape(g));

  const std::size_t rows = g.in_channels * g.kernel * g.kernel;
  const std::size_t plane = g.out_height * g.out_width;
  const std::size_t in_stride = g.in_channels * g.height * g.width;
  const std::size_t out_stride = g.out_channels * plane;
  const ConstMapMat w(weights.data(), static_cast<long>(g.out_channels), static_cast<long>(rows));

  const long batch = static_cast<long>(g.batch);
#pragma omp parallel
  {
    std::vector<double> col(rows * plane);
#pragma omp for schedule(static)
    for (long i = 0; i < batch; ++i) {
      im2col(input.data() + i * in_stride, g, spec, col.data());
      const ConstMapMat cm(col.data(), static_cast<long>(rows), static_cast<long>(plane));
      MapMat y(out.data() + i * out_stride, static_cast<long>(g.out_channels),
               static_cast<long>(plane));
      y.noalias() = w * cm;
      for (std::size_t co = 0; co < g.out_channels; ++co) {
        y.row(static_cast<long>(co)).array() += bias[co];
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          const ConvSpec& spec, bool want_input_grad) {
  const ConvGeometry g = conv_geometry(input, weights, spec);
  require_shape(grad_out, output_shape(g), "conv2d_backward grad_out");

  const std::size_t rows = g.in_channels * g.kernel * g.kernel;
  const std::size_t plane = g.out_height * g.out_width;
  const std::size_t in_plane = g.height * g.width;
  const std::size_t in_stride = g.in_channels * in_plane;
  const std::size_t out_stride = g.out_channels * plane;
  const std::size_t wsize = g.out_channels * rows;
  const ConstMapMat w(weights.data(), static_cast<long>(g.out_channels), static_cast<long>(rows));

  ConvGrads grads;
  if (want_input_grad) grads.input = Tensor(input.shape());
  // Per-image partials, reduced in image order afterwards.
  std::vector<double> partial_w(g.batch * wsize);
  std::vector<double> partial_b(g.batch * g.out_channels);

  const long batch = static_cast<long>(g.batch);
#pragma omp parallel
  {
    std::vector<double> col(rows * plane);
    std::vector<double> dcol(want_input_grad ? rows * plane : 0);
#pragma omp for schedule(static)
    for (long i = 0; i < batch; ++i) {
      im2col(input.data() + i * in_stride, g, spec, col.data());
      const ConstMapMat cm(col.data(), static_cast<long>(rows), static_cast<long>(plane));
      const ConstMapMat dy(grad_out.data() + i * out_stride, static_cast<long>(g.out_channels),
                           static_cast<long>(plane));
      MapMat gw(partial_w.data() + i * wsize, static_cast<long>(g.out_channels),
                static_cast<long>(rows));
      gw.noalias() = dy * cm.transpose();
      for (std::size_t co = 0; co < g.out_channels; ++co) {
        const double* r = grad_out.data() + i * out_stride + co * plane;
        double s = 0.0;
        for (std::size_t p = 0; p < plane; ++p) s += r[p];
        partial_b[i * g.out_channels + co] = s;
      }
      if (want_input_grad) {
        MapMat dc(dcol.data(), static_cast<long>(rows), static_cast<long>(plane));
        dc.noalias() = w.transpose() * dy;
        double* gi = grads.input.data() + i * in_stride;
        for (std::size_t c = 0; c < g.in_channels; ++c) {
          col2im_channel(dcol.data(), g, spec, c, gi + c * in_plane);
        }
      }
    }
  }

  grads.weights = Tensor(weights.shape());
  grads.bias = Tensor({g.out_channels});
  for (std::size_t i = 0; i < g.batch; ++i) {
    const double* pw = partial_w.data() + i * wsize;
    for (std::size_t k = 0; k < wsize; ++k) grads.weights[k] += pw[k];
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      grads.bias[co] += partial_b[i * g.out_channels + co];
    }
  }
  return grads;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  const long n = static_cast<long>(input.size());
  const double* x = input.data();
  double* y = out.data();
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
  require_shape(grad_out, input.shape(), "relu_backward grad_out");
  Tensor out(input.shape());
  const long n = static_cast<long>(input.size());
  const double* x = input.data();
  const double* g = grad_out.data();
  double* y = out.data();
#pragma omp parallel for simd schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? g[i] : 0.0;
  return out;
}

namespace {

// Offset (0..3) of the first maximal cell of the 2x2 window at (oy, ox).
inline int argmax2x2(const double* plane, std::size_t w, std::size_t oy, std::size_t ox) {
  const double* r0 = plane + 2 * oy * w + 2 * ox;
  const double* r1 = r0 + w;
  const double v[4] = {r0[0], r0[1], r1[0], r1[1]};
  int best = 0;
  for (int k = 1; k < 4; ++k) {
    if (v[k] > v[best]) best = k;
  }
  return best;
}

}  // namespace

Tensor maxpool2(const Tensor& input) {
  check_pool_input(input);
  const std::size_t h = input.dim(input.rank() - 2);
  const std::size_t w = input.dim(input.rank() - 1);
  const long planes = static_cast<long>(input.size() / (h * w));
  Tensor out(pooled_shape(input));
  const std::size_t oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
  for (long p = 0; p < planes; ++p) {
    const double* src = input.data() + p * h * w;
    double* dst = out.data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const int k = argmax2x2(src, w, oy, ox);
        dst[oy * ow + ox] = src[(2 * oy + k / 2) * w + 2 * ox + k % 2];
      }
    }
  }
  return out;
}

Tensor maxpool2_backward(const Tensor& grad_out, const Tensor& input) {
  check_pool_input(input);
  require_shape(grad_out, pooled_shape(input), "maxpool2_backward grad_out");
  const std::size_t h = input.dim(input.rank() - 2);
  const std::size_t w = input.dim(input.rank() - 1);
  const long planes = static_cast<long>(input.size() / (h * w));
  Tensor grad_in(input.shape());
  const std::size_t oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
  for (long p = 0; p < planes; ++p) {
    const double* src = input.data() + p * h * w;
    const double* g = grad_out.data() + p * oh * ow;
    double* dst = grad_in.data() + p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const int k = argmax2x2(src, w, oy, ox);
        dst[(2 * oy + k / 2) * w + 2 * ox + k % 2] = g[oy * ow + ox];
      }
    }
  }
  return grad_in;
}

}  // namespace hsseg
