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
#include <string_view>

#include "hsseg/kernels.hpp"
#include "hsseg/rng.hpp"
#include "hsseg/tensor.hpp"

namespace hsseg {

inline constexpr ConvSpec kConv1{3, 16, 3, 1, 1};
inline constexpr ConvSpec kConv2{16, 32, 3, 1, 1};
inline constexpr ConvSpec kConv3{32, 64, 3, 1, 1};
// 1x1 head; its bias absorbs the hypersphere center.
inline constexpr ConvSpec kHead{64, 1, 1, 0, 1};
inline constexpr std::size_t kDownsample = 4;

// Learnable parameters of the toy fully-convolutional network. Also used to
// hold gradients and optimizer velocities (same shapes).
struct FcnParams {
  static constexpr std::size_t kCount = 8;
  static constexpr std::array<std::string_view, kCount> kNames{
      "conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias",
      "conv3.weight", "conv3.bias", "head.weight",  "head.bias"};

  Tensor conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b, head_w, head_b;

  static FcnParams zeros();
  static std::array<Tensor::Shape, kCount> shapes();

  std::array<Tensor*, kCount> tensors();
  std::array<const Tensor*, kCount> tensors() const;

  friend bool operator==(const FcnParams&, const FcnParams&) = default;
};

// He-normal weights (std sqrt(2 / fan_in)), zero biases, head bias 1.0.
FcnParams init_params(const Rng& rng);

// Intermediate activations kept for the backward pass.
struct ForwardCache {
  Tensor input, z1, a1, p1, z2, a2, p2, z3, a3, out;
};

// conv1-relu-pool-conv2-relu-pool-conv3-relu-head: [n,3,H,W] -> [n,1,H/4,W/4].
Tensor forward(const FcnParams& params, const Tensor& images);
ForwardCache forward_cached(const FcnParams& params, const Tensor& images);
// Gradients of all parameters given d(loss)/d(out).
FcnParams backward(const FcnParams& params, const ForwardCache& cache, const Tensor& grad_out);

struct OptState {
  FcnParams velocity = FcnParams::zeros();
  int epoch = 0;
  double base_lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double decay = 0.985;
};

// base_lr * decay^epoch (1.5% decrease per epoch by default).
double lr_at_epoch(int epoch, double base_lr = 1e-3, double decay = 0.985);

// Nesterov SGD with coupled weight decay, at lr_at_epoch(opt.epoch):
//   g = grad + wd * param;  v = mu * v + g;  param -= lr * (g + mu * v)
// Throws NumericalError on a non-finite gradient.
void sgd_nesterov_step(FcnParams& params, const FcnParams& grads, OptState& opt);

}  // namespace hsseg
