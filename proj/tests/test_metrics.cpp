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


#include <chrono>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "hsseg/error.hpp"
#include "hsseg/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace hsseg;
using namespace hsseg::testing;

namespace {

struct Instance {
  std::vector<double> scores, labels;
};

// Random instance with both classes and plenty of ties.
Instance random_instance(Rng& rng, std::size_t max_n = 200) {
  Instance in;
  const auto n = static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(max_n)));
  const auto levels = rng.uniform_int(2, 50);
  const double rate = rng.uniform(0.05, 0.95);
  for (std::size_t i = 0; i < n; ++i) {
    in.scores.push_back(static_cast<double>(rng.uniform_int(0, levels)) / static_cast<double>(levels));
    in.labels.push_back(rng.bernoulli(rate) ? 1.0 : 0.0);
  }
  in.labels[0] = 1.0;
  in.labels[1] = 0.0;
  return in;
}

}  // namespace

TEST_CASE("pixel_auroc: examples and errors") {
  CHECK(pixel_auroc(std::vector{0.1, 0.9}, std::vector{0.0, 1.0}) == 1.0);
  CHECK(pixel_auroc(std::vector{0.5, 0.5}, std::vector{0.0, 1.0}) == 0.5);
  CHECK_THROWS_AS(pixel_auroc(std::vector{0.1, 0.9}, std::vector{1.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(pixel_auroc(std::vector{0.1, 0.9}, std::vector{0.0, 0.5}), ValidationError);
  CHECK_THROWS_AS(pixel_auroc(std::vector{0.1, std::nan("")}, std::vector{0.0, 1.0}), ValidationError);
  CHECK_THROWS_AS(pixel_auroc(std::vector{0.1}, std::vector{0.0, 1.0}), ValidationError);
}

TEST_CASE("pixel_ap: examples and errors") {
  CHECK(pixel_ap(std::vector{0.9, 0.1}, std::vector{1.0, 0.0}) == 1.0);
  CHECK(pixel_ap(std::vector{0.1, 0.9}, std::vector{1.0, 0.0}) == 0.5);
  CHECK(pixel_ap(std::vector{0.3, 0.1, 0.7}, std::vector{1.0, 1.0, 1.0}) == 1.0);
  CHECK_THROWS_AS(pixel_ap(std::vector{0.1, 0.9}, std::vector{0.0, 0.0}), ValidationError);
}

TEST_CASE("metrics match pair-counting and threshold-sweep oracles") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance in = random_instance(rng);
    CHECK(pixel_auroc(in.scores, in.labels) == auroc_oracle(in.scores, in.labels));
    CHECK(pixel_ap(in.scores, in.labels) == ap_oracle(in.scores, in.labels));
  }
}

TEST_CASE("metrics: monotone transforms, reversal and permutation") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    Instance in = random_instance(rng);
    const double auc = pixel_auroc(in.scores, in.labels), ap = pixel_ap(in.scores, in.labels);

    std::vector<double> t = in.scores;
    for (double& v : t) v = std::exp(3.0 * v) - 7.0;
    CHECK(pixel_auroc(t, in.labels) == auc);
    CHECK(pixel_ap(t, in.labels) == doctest::Approx(ap).epsilon(1e-15));

    std::vector<std::size_t> perm(in.scores.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Instance shuffled;
    for (std::size_t i : perm) {
      shuffled.scores.push_back(in.scores[i]);
      shuffled.labels.push_back(in.labels[i]);
    }
    CHECK(pixel_auroc(shuffled.scores, shuffled.labels) == auc);
    CHECK(pixel_ap(shuffled.scores, shuffled.labels) == ap);

    // tie-free scores: AUROC(s) + AUROC(-s) = 1
    std::vector<double> distinct(in.scores.size()), negated(in.scores.size());
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      distinct[i] = rng.uniform();
      negated[i] = -distinct[i];
    }
    CHECK(pixel_auroc(distinct, in.labels) + pixel_auroc(negated, in.labels) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("category_scores pools all pixels in flatten order") {
  Rng rng(3);
  const Tensor masks = random_mask({3, 1, 8, 8}, rng, 0.2);
  const PixelScores perfect = category_scores(masks, masks);
  CHECK(perfect.auroc == 1.0);
  CHECK(perfect.ap == 1.0);
  CHECK(category_scores(Tensor({3, 1, 8, 8}, 0.4), masks).auroc == 0.5);

  const Tensor scores = random_tensor({3, 1, 8, 8}, rng, 0.0, 1.0);
  std::vector<double> s, y;
  for (std::size_t img = 0; img < 3; ++img) {
    for (std::size_t p = 0; p < 64; ++p) {
      s.push_back(scores.at({img, 0, p / 8, p % 8}));
      y.push_back(masks.at({img, 0, p / 8, p % 8}));
    }
  }
  const PixelScores pooled = category_scores(scores, masks);
  CHECK(pooled.auroc == auroc_oracle(s, y));
  CHECK(pooled.ap == ap_oracle(s, y));
  CHECK_THROWS_AS(category_scores(scores, Tensor({3, 1, 8, 7})), ValidationError);
}

TEST_CASE("pixel_auroc handles ten million pairs quickly") {
  Rng rng(4);
  const std::size_t n = 10'000'000;
  std::vector<double> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.bernoulli(0.05) ? 1.0 : 0.0;
    s[i] = rng.uniform() + 0.3 * y[i];
  }
  const auto t0 = std::chrono::steady_clock::now();
  const double auc = pixel_auroc(s, y);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(auc > 0.5);
  CHECK(secs < 10.0);
}
