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

#include <cstddef>

#include "hsseg/tensor.hpp"

namespace hsseg {

struct ConvSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 1;  // odd
  std::size_t padding = 0;
  std::size_t stride = 1;

  // floor((input + 2*padding - kernel_size) / stride) + 1; throws if < 1.
  std::size_t output_extent(std::size_t input) const;
};

struct ConvGrads {
  Tensor input;  // empty when not requested
  Tensor weights;
  Tensor bias;
  friend bool operator==(const ConvGrads&, const ConvGrads&) = default;
};

// Geometry of a conv2d call after validation. Rank-3 inputs are treated as a
// batch of one.
struct ConvGeometry {
  std::size_t batch, in_channels, height, width;
  std::size_t out_channels, out_height, out_width, kernel;
  bool batched;
};

// Validates input/weight/bias shapes against `spec` and throws ShapeError naming
// the offending dimension.
ConvGeometry conv_geometry(const Tensor& input, const Tensor& weights, const ConvSpec& spec);
void check_bias(const Tensor& bias, const ConvSpec& spec);

// Kernels in this header parallelize over images and channels with OpenMP.
// Each output element is produced by a single thread with a fixed summation
// order, so results do not depend on the thread count.

// Cross-correlation (no kernel flip) with zero padding.
// input [C_in,H,W] or [n,C_in,H,W]; weights [C_out,C_in,k,k]; bias [C_out].
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              const ConvSpec& spec);

// Adjoint of conv2d. When `want_input_grad` is false, grads.input is left empty.
ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weights,
                          const ConvSpec& spec, bool want_input_grad = true);

Tensor relu(const Tensor& input);
// Passes grad where input > 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& input);

// 2x2 non-overlapping max over the last two axes (rank 3 or 4). H and W even.
Tensor maxpool2(const Tensor& input);
// Routes each window's gradient to its first (row-major) maximal cell.
Tensor maxpool2_backward(const Tensor& grad_out, const Tensor& input);

}  // namespace hsseg
