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

#include "hsseg/model.hpp"
#include "hsseg/tensor.hpp"

namespace hsseg {

// (2f+1) x (2f+1) isotropic Gaussian with sigma = f/2 sampled at integer
// offsets; center value 1, not normalized.
Tensor gaussian_kernel(std::size_t factor);

// Transposed-convolution style scatter: low-res pixel (y, x) deposits the
// kernel centered at (y*f + f/2, x*f + f/2); each output pixel is then divided
// by the kernel mass it received. low: [n,1,h,w] -> [n,1,f*h,f*w].
// Linear in `low`, maps constants to the same constant.
Tensor gaussian_upsample(const Tensor& low, std::size_t factor);
// Adjoint of gaussian_upsample.
Tensor gaussian_upsample_backward(const Tensor& grad_high, std::size_t factor);

// A = upsample(h(forward(X))) with f = kDownsample. Values are >= 0.
Tensor score_map(const FcnParams& params, const Tensor& images);

// Score map plus what is needed to backpropagate a loss on it.
struct ScoreMapPass {
  ForwardCache net;
  Tensor scores;
};
ScoreMapPass score_map_cached(const FcnParams& params, const Tensor& images);
// Parameter gradients from d(loss)/d(scores).
FcnParams score_map_backward(const FcnParams& params, const ScoreMapPass& pass,
                             const Tensor& grad_scores);

}  // namespace hsseg
