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

#include <functional>
#include <vector>

#include "hsseg/dataset.hpp"
#include "hsseg/imgproc.hpp"
#include "hsseg/losses.hpp"
#include "hsseg/metrics.hpp"
#include "hsseg/model.hpp"
#include "hsseg/synth.hpp"

namespace hsseg {

enum class Supervision { unsupervised, semi };
std::string supervision_name(Supervision s);
Supervision parse_supervision(const std::string& name);

struct TrainConfig {
  LossVariant variant = LossVariant::proposed;
  Supervision supervision = Supervision::unsupervised;
  std::uint64_t seed = 0;
  int epochs = 50;
  std::size_t batch_size = 16;
  int passes_per_epoch = 10;
  double replace_prob = 0.5;
  AugmentConfig augment;
  ConfettiConfig confetti;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  FcnParams params;
  std::vector<EpochLog> log;
};

// Indices into data.test of the anomalous images moved into training in
// semi-supervised mode: one randomly chosen image per anomaly type.
std::vector<std::size_t> select_semi_images(const CategoryData& data, std::uint64_t seed);

using EpochCallback = std::function<void(const EpochLog&)>;

// One training run. Each epoch makes `passes_per_epoch` passes over the
// training images in a seeded shuffled order; every image is independently
// replaced with probability `replace_prob` by an anomalous one (confetti, or a
// held-in real anomaly in semi mode) before augmentation. Every random draw
// for an image comes from a substream keyed by (epoch, pass, image index).
TrainResult train_run(const CategoryData& data, const TrainConfig& cfg,
                      const EpochCallback& on_epoch = {});

struct EvalResult {
  PixelScores metrics;
  Tensor scores;  // [n,1,H,W]
  Tensor masks;   // [n,1,H,W]
  std::vector<std::size_t> test_indices;
};

// Score maps and pooled pixel metrics over the test split, skipping `excluded`.
EvalResult evaluate(const FcnParams& params, const CategoryData& data,
                    const std::vector<std::size_t>& excluded = {}, std::size_t batch_size = 16);

}  // namespace hsseg
