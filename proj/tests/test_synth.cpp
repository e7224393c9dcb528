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


#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "hsseg/dataset.hpp"
#include "hsseg/error.hpp"
#include "hsseg/imgproc.hpp"
#include "hsseg/pnm.hpp"
#include "hsseg/synth.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace hsseg;
using hsseg::testing::random_tensor;
using hsseg::testing::TempDir;
using hsseg::testing::slurp;
using hsseg::testing::tree_hash;
namespace fs = std::filesystem;

namespace {

// True when some 4-connected component of the mask fills its bounding box.
bool has_filled_rectangle(const Tensor& mask) {
  const std::size_t h = mask.dim(1), w = mask.dim(2);
  std::vector<int> seen(h * w, 0);
  for (std::size_t s = 0; s < h * w; ++s) {
    if (mask[s] == 0.0 || seen[s]) continue;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    std::size_t count = 0, y0 = h, y1 = 0, x0 = w, x1 = 0;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++count;
      const std::size_t y = p / w, x = p % w;
      y0 = std::min(y0, y), y1 = std::max(y1, y), x0 = std::min(x0, x), x1 = std::max(x1, x);
      const long nbr[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
      for (const auto& d : nbr) {
        const long yy = static_cast<long>(y) + d[0], xx = static_cast<long>(x) + d[1];
        if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
        const std::size_t q = static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx);
        if (mask[q] != 0.0 && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
    if (count == (y1 - y0 + 1) * (x1 - x0 + 1)) return true;
  }
  return false;
}

double mean(const Tensor& t) { return t.sum() / static_cast<double>(t.size()); }

double mean_abs_dev(const Tensor& t) {
  const double m = mean(t);
  double s = 0.0;
  for (double v : t.values()) s += std::abs(v - m);
  return s / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("gen_normal_image: deterministic and in range") {
  const Rng rng(42);
  for (int c = 0; c < kNumCategories; ++c) {
    const CategorySpec spec = make_category(c);
    const Tensor a = gen_normal_image(spec, rng, 3);
    CHECK(a == gen_normal_image(spec, Rng(42), 3));
    CHECK(a != gen_normal_image(spec, rng, 4));
    CHECK(a.shape() == Tensor::Shape{3, 64, 64});
    for (double v : a.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK_THROWS_AS(make_category(10), ValidationError);
}

TEST_CASE("gen_normal_image: noise-free stripes are periodic") {
  for (int orientation : {0, 1}) {
    CategorySpec spec = make_category(0);
    spec.noise_amplitude = 0.0;
    spec.orientation = orientation;
    const auto period = static_cast<std::size_t>(spec.scale);
    const Tensor img = gen_normal_image(spec, Rng(1), 0);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x) {
          // constant across the stripe direction, periodic along it
          if (orientation == 0) {
            CHECK(img.at({c, y, x}) == img.at({c, 0, x}));
            if (x + period < 64) CHECK(img.at({c, y, x}) == img.at({c, y, x + period}));
          } else {
            CHECK(img.at({c, y, x}) == img.at({c, y, 0}));
            if (y + period < 64) CHECK(img.at({c, y, x}) == img.at({c, y + period, x}));
          }
        }
  }
}

TEST_CASE("categories: mean colors match the frozen fixture and are pairwise distinct") {
  const auto fixture = nlohmann::json::parse(slurp(fs::path(HSSEG_TEST_DATA) / "category_means.json"));
  const Rng rng(0);
  std::vector<std::array<double, 3>> means;
  for (int c = 0; c < kNumCategories; ++c) {
    const CategorySpec spec = make_category(c);
    std::array<double, 3> m{};
    for (int i = 0; i < 100; ++i) {
      const Tensor img = gen_normal_image(spec, rng, static_cast<std::uint64_t>(i));
      for (std::size_t ch = 0; ch < 3; ++ch) {
        double s = 0.0;
        for (std::size_t p = 0; p < 4096; ++p) s += img[ch * 4096 + p];
        m[ch] += s / 4096.0 / 100.0;
      }
    }
    const auto expected = fixture.at(spec.name()).get<std::vector<double>>();
    for (std::size_t ch = 0; ch < 3; ++ch) CHECK(m[ch] == doctest::Approx(expected[ch]).epsilon(1e-12));
    means.push_back(m);
  }
  for (std::size_t a = 0; a < means.size(); ++a)
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      double d = 0.0;
      for (std::size_t ch = 0; ch < 3; ++ch) d += (means[a][ch] - means[b][ch]) * (means[a][ch] - means[b][ch]);
      CHECK(std::sqrt(d) > 0.05);
    }
}

TEST_CASE("confetti: degenerate, constructive and pixel-diff cases") {
  Rng rng(2);
  const Tensor img = gen_normal_image(make_category(1), rng, 0);

  const AnomalyResult none = confetti_apply(img, rng, ConfettiConfig{0, 0, 2, 0});
  CHECK(none.image == img);
  CHECK(none.mask.sum() == 0.0);

  for (std::size_t side : {2u, 5u, 16u}) {
    Tensor im = img, mask({1, 64, 64});
    paint_square(im, mask, 10, 20, side, Rgb{0.1, 0.2, 0.3});
    CHECK(mask.sum() == static_cast<double>(side * side));
  }
  Tensor im = img, mask({1, 64, 64});
  paint_square(im, mask, 60, -2, 8, Rgb{0.1, 0.2, 0.3});
  CHECK(mask.sum() == 4.0 * 6.0);

  for (int draw = 0; draw < 100; ++draw) {
    const AnomalyResult r = confetti_apply(img, rng);
    CHECK(r.mask.sum() > 0.0);
    for (std::size_t p = 0; p < 4096; ++p) {
      const bool changed = r.image[p] != img[p] || r.image[4096 + p] != img[4096 + p] ||
                           r.image[8192 + p] != img[8192 + p];
      CHECK(changed == (r.mask[p] == 1.0));
    }
  }
}

TEST_CASE("confetti: size range beyond the image is rejected") {
  Rng rng(3);
  const Tensor img({3, 64, 64}, 0.5);
  CHECK_THROWS_AS(confetti_apply(img, rng, ConfettiConfig{1, 4, 2, 65}), ValidationError);
  CHECK_THROWS_AS(confetti_apply(img, rng, ConfettiConfig{1, 4, 10, 5}), ValidationError);
  CHECK_THROWS_AS(confetti_apply(img, rng, ConfettiConfig{3, 1, 2, 0}), ValidationError);
}

TEST_CASE("test anomalies: empty stamp, ellipse area and no rectangles") {
  Rng rng(4);
  const Tensor img({3, 64, 64}, 0.5);
  const AnomalyResult none = stamp_test_anomaly(img, rng, StampConfig{AnomalyType::ellipse, 0, 0});
  CHECK(none.image == img);
  CHECK(none.mask.sum() == 0.0);

  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(4.0, 12.0), b = rng.uniform(4.0, 12.0);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    Tensor im = img, mask({1, 64, 64});
    stamp_ellipse(im, mask, rng.uniform(28.0, 36.0), rng.uniform(28.0, 36.0), a, b, theta, Rgb{0.3, -0.3, 0.3});
    const double area = std::numbers::pi * a * b;
    CHECK(mask.sum() >= 0.9 * area);
    CHECK(mask.sum() <= 1.1 * area);
  }

  for (int draw = 0; draw < 200; ++draw) {
    const Tensor base = gen_normal_image(make_category(draw % kNumCategories), rng, draw);
    const auto type = draw % 2 == 0 ? AnomalyType::ellipse : AnomalyType::stroke;
    const AnomalyResult r = stamp_test_anomaly(base, rng, StampConfig{type, 1, 2});
    CHECK(r.mask.sum() > 0.0);
    CHECK_FALSE(has_filled_rectangle(r.mask));
    for (double v : r.image.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("resize_bilinear: identity, constants and a hand-computed 2x2 -> 4x4") {
  Rng rng(5);
  const Tensor img = random_tensor({3, 7, 9}, rng, 0.0, 1.0);
  CHECK(resize_bilinear(img, 7, 9) == img);
  const Tensor flat({3, 5, 5}, 0.25);
  const Tensor flat_big = resize_bilinear(flat, 11, 3);
  for (double v : flat_big.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  const double a = 1, b = 2, c = 3, d = 4;
  const Tensor small({1, 2, 2}, {a, b, c, d});
  // 1-D weights for 2 -> 4 with half-pixel centres and clamping.
  const double w[4][2] = {{1, 0}, {0.75, 0.25}, {0.25, 0.75}, {0, 1}};
  const Tensor big = resize_bilinear(small, 4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double e = w[i][0] * (w[j][0] * a + w[j][1] * b) + w[i][1] * (w[j][0] * c + w[j][1] * d);
      CHECK(std::abs(big.at({0, i, j}) - e) <= 1e-12);
    }

  const Tensor mask({1, 4, 4}, {0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1});
  const Tensor mask_big = resize_nearest(mask, 9, 5);
  for (double v : mask_big.values()) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("augment: degenerate configuration is the resize chain") {
  Rng rng(6);
  const Tensor img = gen_normal_image(make_category(2), rng, 0);
  const AnomalyResult an = confetti_apply(img, rng);
  AugmentConfig cfg;
  cfg.force_resize = true;
  cfg.force_jitter = 0.0;
  cfg.noise = false;
  auto [out, mask] = augment(an.image, an.mask, rng, cfg);
  CHECK(out == resize_bilinear(resize_bilinear(an.image, 69, 69), 64, 64));
  CHECK(mask == resize_nearest(resize_nearest(an.mask, 69, 69), 64, 64));
}

TEST_CASE("augment: crop keeps image and mask aligned, crop offsets are uniform") {
  Rng rng(7);
  const Tensor img = gen_normal_image(make_category(3), rng, 0);
  const AnomalyResult an = confetti_apply(img, rng);
  AugmentConfig cfg;
  cfg.force_resize = false;
  cfg.force_jitter = 0.0;
  cfg.noise = false;
  const Tensor big_img = resize_bilinear(an.image, 69, 69);
  const Tensor big_mask = resize_nearest(an.mask, 69, 69);

  std::vector<int> cells(36, 0);
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    AugmentTrace trace;
    auto [out, mask] = augment(an.image, an.mask, rng, cfg, &trace);
    CHECK_FALSE(trace.resized);
    REQUIRE(trace.crop_y <= 5);
    REQUIRE(trace.crop_x <= 5);
    if (i < 50) {
      const Tensor want = crop(big_mask, trace.crop_y, trace.crop_x, 64, 64);
      CHECK(mask == want);
      CHECK(mask.sum() == want.sum());
      CHECK(out == crop(big_img, trace.crop_y, trace.crop_x, 64, 64));
    }
    ++cells[trace.crop_y * 6 + trace.crop_x];
  }
  // Chi-square over the 36 offsets, df = 35; 57.342 is the 0.99 quantile.
  const double expected = draws / 36.0;
  double chi2 = 0.0;
  for (int c : cells) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 57.342);
}

TEST_CASE("augment: photometric steps never touch the mask") {
  Rng rng(8);
  const Tensor img = gen_normal_image(make_category(4), rng, 0);
  const AnomalyResult an = confetti_apply(img, rng);
  for (int i = 0; i < 20; ++i) {
    AugmentConfig cfg;
    cfg.force_resize = true;
    auto [out, mask] = augment(an.image, an.mask, rng, cfg);
    CHECK(mask == resize_nearest(resize_nearest(an.mask, 69, 69), 64, 64));
    CHECK(out.all_finite());
  }
}

TEST_CASE("color_jitter: unit factors are the identity") {
  Rng rng(9);
  const Tensor img = random_tensor({3, 8, 8}, rng, 0.0, 1.0);
  CHECK(color_jitter(img, JitterFactors{}) == img);
  const JitterFactors f = draw_jitter(rng, 0.04);
  for (double v : {f.brightness, f.contrast, f.saturation}) {
    CHECK(v >= 0.96);
    CHECK(v <= 1.04);
  }
  CHECK(std::abs(f.hue) <= 0.04);
}

TEST_CASE("lcn and minmax") {
  CHECK(lcn(Tensor({3, 4, 4}, 0.7)) == Tensor({3, 4, 4}, 0.0));
  Rng rng(10);
  for (int i = 0; i < 20; ++i) {
    const Tensor x = random_tensor({3, 9, 7}, rng, -2.0, 5.0);
    const Tensor y = lcn(x);
    CHECK(std::abs(mean(y)) <= 1e-9);
    CHECK(mean_abs_dev(y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_abs_diff(lcn(y), y) <= 1e-9);

    const Tensor m = minmax(x);
    CHECK(*std::min_element(m.values().begin(), m.values().end()) == 0.0);
    CHECK(*std::max_element(m.values().begin(), m.values().end()) == 1.0);
  }
  CHECK(minmax(Tensor({2}, {-1, 3})) == Tensor({2}, {0, 1}));
  CHECK(minmax(Tensor({3, 2, 2}, 4.0)) == Tensor({3, 2, 2}, 0.5));
}

TEST_CASE("pnm round trips") {
  TempDir dir("pnm");
  Rng rng(11);
  Tensor img({3, 5, 6});
  for (double& v : img.values()) v = static_cast<double>(rng.uniform_int(0, 255)) / 255.0;
  write_ppm(dir.path() / "a.ppm", img);
  CHECK(max_abs_diff(read_ppm(dir.path() / "a.ppm"), img) <= 1e-12);
  const Tensor mask = hsseg::testing::random_mask({1, 5, 6}, rng, 0.4);
  write_mask_pgm(dir.path() / "m.pgm", mask);
  CHECK(read_mask_pgm(dir.path() / "m.pgm") == mask);
  const std::string bytes = slurp(dir.path() / "m.pgm");
  CHECK(bytes.rfind("P5", 0) == 0);
}

TEST_CASE("write_dataset: manifest entries, masks and byte-identical reruns") {
  TempDir dir("ds");
  const std::vector<CategorySpec> specs{make_category(0), make_category(5)};
  const DatasetCounts counts{4, 2, 2};
  const auto manifest = write_dataset(dir.path() / "a", specs, 9, counts);
  write_dataset(dir.path() / "b", specs, 9, counts);
  CHECK(tree_hash(dir.path() / "a") == tree_hash(dir.path() / "b"));
  CHECK(read_manifest(dir.path() / "a") == manifest);

  for (const auto& cat : manifest.at("categories")) {
    CHECK(cat.at("entries").size() == 8);
    for (const auto& e : cat.at("entries")) {
      if (e.at("role") == "test_anomalous") {
        const Tensor m = read_mask_pgm(dir.path() / "a" / e.at("mask").get<std::string>());
        CHECK(m.sum() > 0.0);
      }
    }
  }
  const CategoryData data = load_category(dir.path() / "a", manifest, "c5_stripes");
  CHECK(data.train.size() == 4);
  CHECK(data.test.size() == 4);

  CHECK_THROWS_AS(write_dataset(dir.path() / "a", specs, 9, counts), ValidationError);
  write_dataset(dir.path() / "c", specs, 10, counts);
  CHECK(tree_hash(dir.path() / "a") != tree_hash(dir.path() / "c"));
}

TEST_CASE("rng: substreams are independent of sibling draws") {
  Rng root(123);
  Rng a = root.substream("x", 1, 2);
  const double first = a.uniform();
  Rng b = root.substream("y", 1, 2);
  for (int i = 0; i < 10; ++i) (void)b.uniform();
  CHECK(Rng(123).substream("x", 1, 2).uniform() == first);
  CHECK(Rng(123).substream("x", 1, 3).uniform() != first);
  for (int i = 0; i < 1000; ++i) {
    const auto k = a.uniform_int(-3, 4);
    CHECK(k >= -3);
    CHECK(k <= 4);
  }
}
