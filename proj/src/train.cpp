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

#include "hsseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hsseg/error.hpp"
#include "hsseg/heatmap.hpp"

namespace hsseg {

std::string supervision_name(Supervision s) {
  return s == Supervision::unsupervised ? "unsup" : "semi";
}

Supervision parse_supervision(const std::string& name) {
  if (name == "unsup" || name == "unsupervised") return Supervision::unsupervised;
  if (name == "semi" || name == "semi-supervised") return Supervision::semi;
  throw ValidationError("unknown supervision mode '" + name + "' (expected unsup|semi)");
}

std::vector<std::size_t> select_semi_images(const CategoryData& data, std::uint64_t seed) {
  Rng rng = Rng(seed).substream("semi-select", static_cast<std::uint64_t>(data.spec.category_id));
  std::vector<std::size_t> chosen;
  for (int t = 0; t < kNumAnomalyTypes; ++t) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < data.test.size(); ++i) {
      if (data.test[i].anomalous && data.test[i].type == static_cast<AnomalyType>(t)) {
        candidates.push_back(i);
      }
    }
    if (candidates.empty()) continue;
    const auto k = rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1);
    chosen.push_back(candidates[static_cast<std::size_t>(k)]);
  }
  return chosen;
}

namespace {

void copy_into(Tensor& batch, std::size_t slot, const Tensor& item) {
  std::memcpy(batch.data() + slot * item.size(), item.data(), item.size() * sizeof(double));
}

}  // namespace

TrainResult train_run(const CategoryData& data, const TrainConfig& cfg,
                      const EpochCallback& on_epoch) {
  if (data.train.empty()) throw ValidationError("train_run: empty training set");
  if (cfg.batch_size == 0) throw ValidationError("train_run: batch_size must be positive");
  if (cfg.epochs < 0) throw ValidationError("train_run: negative epoch count");

  const Rng root(cfg.seed);
  TrainResult result{init_params(root.substream("params")), {}};
  if (cfg.epochs == 0) return result;

  std::vector<const TestImage*> held_in;
  if (cfg.supervision == Supervision::semi) {
    for (std::size_t i : select_semi_images(data, cfg.seed)) held_in.push_back(&data.test[i]);
    if (held_in.empty()) {
      throw ValidationError("train_run: semi-supervised mode needs anomalous test images");
    }
  }

  const std::size_t n_train = data.train.size();
  const std::size_t size = cfg.augment.out_size;
  const std::size_t h = data.train.front().dim(1), w = data.train.front().dim(2);
  OptState opt;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    opt.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (int pass = 0; pass < cfg.passes_per_epoch; ++pass) {
      const auto step = static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(cfg.passes_per_epoch) +
                        static_cast<std::uint64_t>(pass);
      std::vector<std::size_t> order(n_train);
      for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
      Rng shuffle_rng = root.substream("shuffle", step);
      shuffle_rng.shuffle(order);

      for (std::size_t start = 0; start < n_train; start += cfg.batch_size) {
        const std::size_t count = std::min(cfg.batch_size, n_train - start);
        Tensor images({count, 3, size, size});
        Tensor masks({count, 1, size, size});
        const long slots = static_cast<long>(count);
        std::string failure;
#pragma omp parallel for schedule(static)
        for (long s = 0; s < slots; ++s) {
          try {
            const std::size_t idx = order[start + static_cast<std::size_t>(s)];
            Rng rng = root.substream("sample", step, idx);
            Tensor img = data.train[idx];
            Tensor mask({1, h, w});
            if (rng.bernoulli(cfg.replace_prob)) {
              if (cfg.supervision == Supervision::unsupervised) {
                AnomalyResult a = confetti_apply(img, rng, cfg.confetti);
                img = std::move(a.image);
                mask = std::move(a.mask);
              } else {
                const auto k = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(held_in.size()) - 1));
                img = held_in[k]->image;
                mask = held_in[k]->mask;
              }
            }
            auto [x, y] = preprocess_train(img, mask, rng, cfg.augment);
            copy_into(images, static_cast<std::size_t>(s), x);
            copy_into(masks, static_cast<std::size_t>(s), y);
          } catch (const std::exception& e) {
#pragma omp critical
            failure = e.what();
          }
        }
        if (!failure.empty()) throw ValidationError("train_run: " + failure);

        const ScoreMapPass pass_out = score_map_cached(result.params, images);
        const LossValue loss = training_loss(cfg.variant, pass_out.scores, masks);
        if (!std::isfinite(loss.value)) {
          throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
        }
        const FcnParams grads = score_map_backward(result.params, pass_out, loss.grad);
        sgd_nesterov_step(result.params, grads, opt);
        loss_sum += loss.value;
        ++batches;
      }
    }
    for (const Tensor* t : result.params.tensors()) {
      if (!t->all_finite()) {
        throw NumericalError("non-finite parameter after epoch " + std::to_string(epoch));
      }
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(batches),
                   lr_at_epoch(epoch, opt.base_lr, opt.decay)};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  return result;
}

EvalResult evaluate(const FcnParams& params, const CategoryData& data,
                    const std::vector<std::size_t>& excluded, std::size_t batch_size) {
  EvalResult r;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) r.test_indices.push_back(i);
  }
  if (r.test_indices.empty()) throw ValidationError("evaluate: no test images");
  const std::size_t n = r.test_indices.size();
  const std::size_t size = data.spec.image_size;
  r.scores = Tensor({n, 1, size, size});
  r.masks = Tensor({n, 1, size, size});
  const std::size_t plane = size * size;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t count = std::min(batch_size, n - start);
    Tensor images({count, 3, size, size});
    for (std::size_t s = 0; s < count; ++s) {
      const TestImage& t = data.test[r.test_indices[start + s]];
      copy_into(images, s, preprocess_test(t.image, size));
      const Tensor m = resize_nearest(t.mask, size, size);
      std::memcpy(r.masks.data() + (start + s) * plane, m.data(), plane * sizeof(double));
    }
    const Tensor a = score_map(params, images);
    if (!a.all_finite()) throw NumericalError("evaluate: non-finite score map");
    std::memcpy(r.scores.data() + start * plane, a.data(), a.size() * sizeof(double));
  }
  r.metrics = category_scores(r.scores, r.masks);
  return r;
}

}  // namespace hsseg
