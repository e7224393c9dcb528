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

// Parallel kernels against the serial reference on the network's layer
// shapes at the training batch size. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <tuple>

#include "hsseg/heatmap.hpp"
#include "hsseg/kernels.hpp"
#include "hsseg/model.hpp"
#include "hsseg/reference.hpp"
#include "hsseg/rng.hpp"

namespace {

using namespace hsseg;

constexpr std::size_t kBatch = 16;

Tensor random(Tensor::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Layer index -> (spec, spatial size of its input).
std::pair<ConvSpec, std::size_t> layer(std::int64_t i) {
  switch (i) {
    case 0: return {kConv1, 64};
    case 1: return {kConv2, 32};
    case 2: return {kConv3, 16};
    default: return {kHead, 16};
  }
}

struct ConvCase {
  ConvSpec spec;
  Tensor input, weights, bias, grad_out;
  explicit ConvCase(std::int64_t i) {
    std::size_t size = 0;
    std::tie(spec, size) = layer(i);
    input = random({kBatch, spec.in_channels, size, size}, 1);
    weights = random({spec.out_channels, spec.in_channels, spec.kernel_size, spec.kernel_size}, 2);
    bias = random({spec.out_channels}, 3);
    grad_out = random({kBatch, spec.out_channels, size, size}, 4);
  }
};

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const ConvCase c(state.range(0));
  for (auto _ : state) {
    Tensor out = Parallel ? conv2d(c.input, c.weights, c.bias, c.spec)
                          : reference::conv2d(c.input, c.weights, c.bias, c.spec);
    benchmark::DoNotOptimize(out.values().data());
  }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  const ConvCase c(state.range(0));
  for (auto _ : state) {
    ConvGrads g = Parallel ? conv2d_backward(c.grad_out, c.input, c.weights, c.spec)
                           : reference::conv2d_backward(c.grad_out, c.input, c.weights, c.spec);
    benchmark::DoNotOptimize(g.weights.values().data());
  }
}

template <bool Parallel>
void BM_MaxPool(benchmark::State& state) {
  const Tensor input = random({kBatch, 16, 64, 64}, 5);
  const Tensor grad = random({kBatch, 16, 32, 32}, 6);
  for (auto _ : state) {
    Tensor out = Parallel ? maxpool2(input) : reference::maxpool2(input);
    Tensor back = Parallel ? maxpool2_backward(grad, input) : reference::maxpool2_backward(grad, input);
    benchmark::DoNotOptimize(out.values().data());
    benchmark::DoNotOptimize(back.values().data());
  }
}

void BM_Upsample(benchmark::State& state) {
  const Tensor low = random({kBatch, 1, 16, 16}, 7);
  for (auto _ : state) {
    Tensor high = gaussian_upsample(low, kDownsample);
    benchmark::DoNotOptimize(high.values().data());
  }
}

void BM_ScoreMap(benchmark::State& state) {
  const FcnParams params = init_params(Rng(0));
  const Tensor images = random({kBatch, 3, 64, 64}, 8);
  for (auto _ : state) {
    Tensor a = score_map(params, images);
    benchmark::DoNotOptimize(a.values().data());
  }
}

BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/parallel")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/reference")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/parallel")->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool<false>)->Name("maxpool/reference")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxPool<true>)->Name("maxpool/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Upsample)->Name("gaussian_upsample")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreMap)->Name("score_map/batch16")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
