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

#include "hsseg/reference.hpp"

#include "hsseg/error.hpp"

namespace hsseg::reference {

namespace {

Tensor::Shape conv_out_shape(const ConvGeometry& g) {
  if (g.batched) return {g.batch, g.out_channels, g.out_height, g.out_width};
  return {g.out_channels, g.out_height, g.out_width};
}

// Input coordinate feeding output `o` through kernel tap `k`, or -1 if padded.
long source_index(std::size_t o, std::size_t k, const ConvSpec& spec, std::size_t extent) {
  const long i = static_cast<long>(o * spec.stride + k) - static_cast<long>(spec.padding);
  return (i < 0 || i >= static_cast<long>(extent)) ? -1 : i;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              const ConvSpec& spec) {
  const ConvGeometry g = conv_geometry(input, weights, spec);
  check_bias(bias, spec);
  Tensor out(conv_out_shape(g));
  const std::size_t k = g.kernel;
  std::size_t o = 0;
  for (std::size_t i = 0; i < g.batch; ++i) {
    const double* img = input.data() + i * g.in_channels * g.height * g.width;
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      for (std::size_t oy = 0; oy < g.out_height; ++oy) {
        for (std::size_t ox = 0; ox < g.out_width; ++ox) {
          double acc = bias[co];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              const long iy = source_index(oy, ky, spec, g.height);
              if (iy < 0) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long ix = source_index(ox, kx, spec, g.width);
                if (ix < 0) continue;
                acc += weights[((co * g.in_channels + ci) * k + ky) * k + kx] *
                       img[(ci * g.height + iy) * g.width + ix];
              }
            }
          }
          out[o++] = acc;
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          const ConvSpec& spec, bool want_input_grad) {
  const ConvGeometry g = conv_geometry(input, weights, spec);
  require_shape(grad_out, conv_out_shape(g), "conv2d_backward grad_out");
  ConvGrads grads;
  grads.weights = Tensor(weights.shape());
  grads.bias = Tensor({g.out_channels});
  if (want_input_grad) grads.input = Tensor(input.shape());
  const std::size_t k = g.kernel;
  std::size_t o = 0;
  for (std::size_t i = 0; i < g.batch; ++i) {
    const std::size_t img = i * g.in_channels * g.height * g.width;
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      for (std::size_t oy = 0; oy < g.out_height; ++oy) {
        for (std::size_t ox = 0; ox < g.out_width; ++ox) {
          const double go = grad_out[o++];
          grads.bias[co] += go;
          for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              const long iy = source_index(oy, ky, spec, g.height);
              if (iy < 0) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long ix = source_index(ox, kx, spec, g.width);
                if (ix < 0) continue;
                const std::size_t wi = ((co * g.in_channels + ci) * k + ky) * k + kx;
                const std::size_t xi = img + (ci * g.height + iy) * g.width + ix;
                grads.weights[wi] += go * input[xi];
                if (want_input_grad) grads.input[xi] += go * weights[wi];
              }
            }
          }
        }
      }
    }
  }
  return grads;
}

Tensor relu(const Tensor& input) {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& input) {
  require_shape(grad_out, input.shape(), "relu_backward grad_out");
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? grad_out[i] : 0.0;
  return out;
}

namespace {

struct PoolDims {
  std::size_t planes, h, w;
};

PoolDims pool_dims(const Tensor& input) {
  if (input.rank() != 3 && input.rank() != 4) {
    throw ShapeError("maxpool2: expected rank 3 or 4 input, got " + to_string(input.shape()));
  }
  PoolDims d{};
  d.h = input.dim(input.rank() - 2);
  d.w = input.dim(input.rank() - 1);
  if (d.h % 2 != 0) throw ShapeError("maxpool2: height " + std::to_string(d.h) + " is odd");
  if (d.w % 2 != 0) throw ShapeError("maxpool2: width " + std::to_string(d.w) + " is odd");
  d.planes = input.size() / (d.h * d.w);
  return d;
}

Tensor::Shape half_shape(const Tensor& input) {
  Tensor::Shape s = input.shape();
  s[s.size() - 2] /= 2;
  s[s.size() - 1] /= 2;
  return s;
}

}  // namespace

Tensor maxpool2(const Tensor& input) {
  const PoolDims d = pool_dims(input);
  Tensor out(half_shape(input));
  std::size_t o = 0;
  for (std::size_t p = 0; p < d.planes; ++p) {
    for (std::size_t oy = 0; oy < d.h / 2; ++oy) {
      for (std::size_t ox = 0; ox < d.w / 2; ++ox) {
        double best = input[(p * d.h + 2 * oy) * d.w + 2 * ox];
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            best = std::max(best, input[(p * d.h + 2 * oy + dy) * d.w + 2 * ox + dx]);
          }
        }
        out[o++] = best;
      }
    }
  }
  return out;
}

Tensor maxpool2_backward(const Tensor& grad_out, const Tensor& input) {
  const PoolDims d = pool_dims(input);
  require_shape(grad_out, half_shape(input), "maxpool2_backward grad_out");
  Tensor grad_in(input.shape());
  std::size_t o = 0;
  for (std::size_t p = 0; p < d.planes; ++p) {
    for (std::size_t oy = 0; oy < d.h / 2; ++oy) {
      for (std::size_t ox = 0; ox < d.w / 2; ++ox) {
        std::size_t best = (p * d.h + 2 * oy) * d.w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (p * d.h + 2 * oy + dy) * d.w + 2 * ox + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        grad_in[best] += grad_out[o++];
      }
    }
  }
  return grad_in;
}

}  // namespace hsseg::reference
