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

#include "hsseg/model.hpp"

#include <cmath>
#include <string>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

Tensor::Shape weight_shape(const ConvSpec& s) {
  return {s.out_channels, s.in_channels, s.kernel_size, s.kernel_size};
}

}  // namespace

std::array<Tensor::Shape, FcnParams::kCount> FcnParams::shapes() {
  return {weight_shape(kConv1), Tensor::Shape{kConv1.out_channels},
          weight_shape(kConv2), Tensor::Shape{kConv2.out_channels},
          weight_shape(kConv3), Tensor::Shape{kConv3.out_channels},
          weight_shape(kHead),  Tensor::Shape{kHead.out_channels}};
}

FcnParams FcnParams::zeros() {
  FcnParams p;
  const auto s = shapes();
  auto t = p.tensors();
  for (std::size_t i = 0; i < kCount; ++i) *t[i] = Tensor(s[i]);
  return p;
}

std::array<Tensor*, FcnParams::kCount> FcnParams::tensors() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &conv3_w, &conv3_b, &head_w, &head_b};
}

std::array<const Tensor*, FcnParams::kCount> FcnParams::tensors() const {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &conv3_w, &conv3_b, &head_w, &head_b};
}

FcnParams init_params(const Rng& rng) {
  FcnParams p = FcnParams::zeros();
  auto t = p.tensors();
  for (std::size_t i = 0; i < FcnParams::kCount; i += 2) {
    Tensor& w = *t[i];
    const double fan_in = static_cast<double>(w.dim(1) * w.dim(2) * w.dim(3));
    const double std = std::sqrt(2.0 / fan_in);
    Rng r = rng.substream("init", i);
    for (double& v : w.values()) v = std * r.normal();
  }
  p.head_b[0] = 1.0;
  return p;
}

ForwardCache forward_cached(const FcnParams& params, const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != 3) {
    throw ShapeError("forward: expected images [n,3,H,W], got " + to_string(images.shape()));
  }
  if (images.dim(2) % kDownsample != 0 || images.dim(3) % kDownsample != 0) {
    throw ShapeError("forward: spatial size " + to_string(images.shape()) +
                     " not divisible by " + std::to_string(kDownsample));
  }
  ForwardCache c;
  c.input = images;
  c.z1 = conv2d(images, params.conv1_w, params.conv1_b, kConv1);
  c.a1 = relu(c.z1);
  c.p1 = maxpool2(c.a1);
  c.z2 = conv2d(c.p1, params.conv2_w, params.conv2_b, kConv2);
  c.a2 = relu(c.z2);
  c.p2 = maxpool2(c.a2);
  c.z3 = conv2d(c.p2, params.conv3_w, params.conv3_b, kConv3);
  c.a3 = relu(c.z3);
  c.out = conv2d(c.a3, params.head_w, params.head_b, kHead);
  return c;
}

Tensor forward(const FcnParams& params, const Tensor& images) {
  return forward_cached(params, images).out;
}

FcnParams backward(const FcnParams& params, const ForwardCache& c, const Tensor& grad_out) {
  FcnParams g;
  ConvGrads head = conv2d_backward(grad_out, c.a3, params.head_w, kHead);
  g.head_w = std::move(head.weights);
  g.head_b = std::move(head.bias);
  ConvGrads l3 = conv2d_backward(relu_backward(head.input, c.z3), c.p2, params.conv3_w, kConv3);
  g.conv3_w = std::move(l3.weights);
  g.conv3_b = std::move(l3.bias);
  const Tensor d2 = relu_backward(maxpool2_backward(l3.input, c.a2), c.z2);
  ConvGrads l2 = conv2d_backward(d2, c.p1, params.conv2_w, kConv2);
  g.conv2_w = std::move(l2.weights);
  g.conv2_b = std::move(l2.bias);
  const Tensor d1 = relu_backward(maxpool2_backward(l2.input, c.a1), c.z1);
  ConvGrads l1 = conv2d_backward(d1, c.input, params.conv1_w, kConv1, false);
  g.conv1_w = std::move(l1.weights);
  g.conv1_b = std::move(l1.bias);
  return g;
}

double lr_at_epoch(int epoch, double base_lr, double decay) {
  if (epoch < 0) throw ValidationError("lr_at_epoch: negative epoch");
  return base_lr * std::pow(decay, epoch);
}

void sgd_nesterov_step(FcnParams& params, const FcnParams& grads, OptState& opt) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto v = opt.velocity.tensors();
  for (std::size_t k = 0; k < FcnParams::kCount; ++k) {
    require_shape(*g[k], p[k]->shape(), std::string("gradient ") + std::string(FcnParams::kNames[k]));
    require_shape(*v[k], p[k]->shape(), std::string("velocity ") + std::string(FcnParams::kNames[k]));
    if (!g[k]->all_finite()) {
      throw NumericalError("non-finite gradient in " + std::string(FcnParams::kNames[k]));
    }
  }
  const double lr = lr_at_epoch(opt.epoch, opt.base_lr, opt.decay);
  for (std::size_t k = 0; k < FcnParams::kCount; ++k) {
    double* pw = p[k]->data();
    double* vel = v[k]->data();
    const double* gr = g[k]->data();
    for (std::size_t i = 0; i < p[k]->size(); ++i) {
      const double gi = gr[i] + opt.weight_decay * pw[i];
      vel[i] = opt.momentum * vel[i] + gi;
      pw[i] -= lr * (gi + opt.momentum * vel[i]);
    }
  }
}

}  // namespace hsseg
