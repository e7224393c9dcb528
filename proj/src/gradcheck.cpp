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

#include "hsseg/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "hsseg/heatmap.hpp"
#include "hsseg/kernels.hpp"
#include "hsseg/losses.hpp"
#include "hsseg/model.hpp"
#include "hsseg/rng.hpp"

namespace hsseg {

namespace {

constexpr double kKinkMargin = 1e-4;

Tensor random_tensor(Tensor::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Compares `analytic` (d f / d x) with central differences of f on the chosen
// entries of x. x is perturbed in place and restored.
double check_entries(Tensor& x, const Tensor& analytic, const std::function<double()>& f,
                     double step, const std::vector<std::size_t>& entries) {
  std::vector<double> numeric(entries.size());
  double scale = 0.0;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const std::size_t i = entries[e];
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f();
    x[i] = saved - step;
    const double down = f();
    x[i] = saved;
    numeric[e] = (up - down) / (2.0 * step);
    scale = std::max(scale, std::abs(numeric[e]));
  }
  double worst = 0.0;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    worst = std::max(worst, gradient_relative_error(analytic[entries[e]], numeric[e], 1e-3 * scale));
  }
  return worst;
}

std::vector<std::size_t> all_entries(const Tensor& t) {
  std::vector<std::size_t> e(t.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = i;
  return e;
}

std::vector<std::size_t> sample_entries(const Tensor& t, std::size_t count, Rng& rng) {
  if (t.size() <= count) return all_entries(t);
  std::vector<std::size_t> e;
  for (std::size_t k = 0; k < count; ++k) {
    e.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(t.size()) - 1)));
  }
  return e;
}

bool near_relu_kink(const Tensor& pre) {
  return std::any_of(pre.values().begin(), pre.values().end(),
                     [](double v) { return std::abs(v) < kKinkMargin; });
}

// A 2x2 window whose two largest entries are both positive and closer than
// the margin can switch its argmax under perturbation.
bool near_pool_kink(const Tensor& x) {
  const std::size_t h = x.dim(x.rank() - 2), w = x.dim(x.rank() - 1);
  const std::size_t planes = x.size() / (h * w);
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < h; y += 2) {
      for (std::size_t xx = 0; xx < w; xx += 2) {
        const double* r0 = x.data() + (p * h + y) * w + xx;
        double v[4] = {r0[0], r0[1], r0[w], r0[w + 1]};
        std::sort(v, v + 4);
        if (v[3] > 0.0 && v[3] - v[2] < kKinkMargin) return true;
      }
    }
  }
  return false;
}

using CaseFn = std::function<bool(Rng&, GradCheckStats&)>;

GradCheckStats run_op(const std::string& name, double tol, const GradCheckConfig& cfg,
                      const CaseFn& one_case) {
  GradCheckStats s;
  s.op = name;
  s.tolerance = tol;
  Rng rng = Rng(cfg.seed).substream(name);
  int attempts = 0;
  while (s.cases < cfg.cases_per_op && attempts < 20 * cfg.cases_per_op) {
    ++attempts;
    if (one_case(rng, s)) {
      ++s.cases;
    } else {
      ++s.skipped;
    }
  }
  return s;
}

void record(GradCheckStats& s, double err) {
  if (std::isnan(err)) err = INFINITY;
  s.max_rel_error = std::max(s.max_rel_error, err);
}

bool conv_case(Rng& rng, GradCheckStats& s, const GradCheckConfig& cfg, bool head) {
  ConvSpec spec;
  std::size_t n, hgt, wid;
  if (head) {
    spec = ConvSpec{static_cast<std::size_t>(rng.uniform_int(2, 8)), 1, 1, 0, 1};
    n = static_cast<std::size_t>(rng.uniform_int(1, 2));
    hgt = static_cast<std::size_t>(rng.uniform_int(1, 4));
    wid = static_cast<std::size_t>(rng.uniform_int(1, 4));
  } else {
    spec.in_channels = static_cast<std::size_t>(rng.uniform_int(1, 3));
    spec.out_channels = static_cast<std::size_t>(rng.uniform_int(1, 3));
    spec.kernel_size = rng.bernoulli(0.75) ? 3 : 1;
    spec.padding = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(spec.kernel_size / 2)));
    spec.stride = static_cast<std::size_t>(rng.uniform_int(1, 2));
    n = static_cast<std::size_t>(rng.uniform_int(1, 2));
    hgt = static_cast<std::size_t>(rng.uniform_int(3, 6));
    wid = static_cast<std::size_t>(rng.uniform_int(3, 6));
  }
  Tensor x = random_tensor({n, spec.in_channels, hgt, wid}, rng);
  Tensor w = random_tensor({spec.out_channels, spec.in_channels, spec.kernel_size, spec.kernel_size}, rng);
  Tensor b = random_tensor({spec.out_channels}, rng);
  const Tensor y0 = conv2d(x, w, b, spec);
  const Tensor r = random_tensor(y0.shape(), rng);
  const ConvGrads g = conv2d_backward(r, x, w, spec);
  auto f = [&] { return dot(r, conv2d(x, w, b, spec)); };
  record(s, check_entries(x, g.input, f, cfg.step, all_entries(x)));
  record(s, check_entries(w, g.weights, f, cfg.step, all_entries(w)));
  record(s, check_entries(b, g.bias, f, cfg.step, all_entries(b)));
  return true;
}

Tensor random_masks(Tensor::Shape shape, Rng& rng) {
  Tensor m(std::move(shape));
  const double rate = rng.uniform(0.0, 0.5);
  for (double& v : m.values()) v = rng.bernoulli(rate) ? 1.0 : 0.0;
  return m;
}

bool loss_case(Rng& rng, GradCheckStats& s, const GradCheckConfig& cfg, LossVariant variant) {
  const auto n = static_cast<std::size_t>(rng.uniform_int(1, 3));
  const auto h = static_cast<std::size_t>(rng.uniform_int(2, 6));
  const auto w = static_cast<std::size_t>(rng.uniform_int(2, 6));
  Tensor a = random_tensor({n, 1, h, w}, rng, 0.1, 3.0);
  const Tensor y = random_masks(a.shape(), rng);
  const LossValue lv = training_loss(variant, a, y);
  auto f = [&] { return training_loss(variant, a, y).value; };
  record(s, check_entries(a, lv.grad, f, cfg.step, all_entries(a)));
  return true;
}

bool network_case(Rng& rng, GradCheckStats& s, const GradCheckConfig& cfg, LossVariant variant) {
  FcnParams params = init_params(Rng(rng.next_u64()));
  for (Tensor* t : {&params.conv1_b, &params.conv2_b, &params.conv3_b}) {
    for (double& v : t->values()) v = rng.uniform(-0.1, 0.1);
  }
  params.head_b[0] = rng.uniform(0.5, 1.5);
  const Tensor images = random_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
  const ScoreMapPass pass = score_map_cached(params, images);
  const ForwardCache& c = pass.net;
  if (near_relu_kink(c.z1) || near_relu_kink(c.z2) || near_relu_kink(c.z3) ||
      near_pool_kink(c.a1) || near_pool_kink(c.a2)) {
    return false;
  }
  const Tensor masks = random_masks(pass.scores.shape(), rng);
  const LossValue lv = training_loss(variant, pass.scores, masks);
  const FcnParams grads = score_map_backward(params, pass, lv.grad);
  auto f = [&] { return training_loss(variant, score_map(params, images), masks).value; };
  auto pt = params.tensors();
  auto gt = grads.tensors();
  for (std::size_t k = 0; k < FcnParams::kCount; ++k) {
    record(s, check_entries(*pt[k], *gt[k], f, cfg.step, sample_entries(*pt[k], 6, rng)));
  }
  return true;
}

}  // namespace

double gradient_relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  if (denom == 0.0) return 0.0;
  return std::abs(analytic - numeric) / denom;
}

bool GradCheckReport::passed() const {
  return !ops.empty() && std::all_of(ops.begin(), ops.end(), [](const auto& o) { return o.passed(); });
}

GradCheckReport run_gradient_checks(const GradCheckConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  GradCheckReport report;
  const double step = cfg.step;

  report.ops.push_back(run_op("conv2d", cfg.op_tolerance, cfg,
                              [&](Rng& r, GradCheckStats& s) { return conv_case(r, s, cfg, false); }));
  report.ops.push_back(run_op("conv2d.head1x1", cfg.op_tolerance, cfg,
                              [&](Rng& r, GradCheckStats& s) { return conv_case(r, s, cfg, true); }));

  report.ops.push_back(run_op("relu", cfg.op_tolerance, cfg, [&](Rng& rng, GradCheckStats& s) {
    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    if (near_relu_kink(x)) return false;
    const Tensor r = random_tensor(x.shape(), rng);
    auto f = [&] { return dot(r, relu(x)); };
    record(s, check_entries(x, relu_backward(r, x), f, step, all_entries(x)));
    return true;
  }));

  report.ops.push_back(run_op("maxpool2", cfg.op_tolerance, cfg, [&](Rng& rng, GradCheckStats& s) {
    const auto c = static_cast<std::size_t>(rng.uniform_int(1, 3));
    const auto h = 2 * static_cast<std::size_t>(rng.uniform_int(1, 3));
    const auto w = 2 * static_cast<std::size_t>(rng.uniform_int(1, 3));
    Tensor x = random_tensor({2, c, h, w}, rng, 0.01, 1.0);
    if (near_pool_kink(x)) return false;
    const Tensor r = random_tensor({2, c, h / 2, w / 2}, rng);
    auto f = [&] { return dot(r, maxpool2(x)); };
    record(s, check_entries(x, maxpool2_backward(r, x), f, step, all_entries(x)));
    return true;
  }));

  report.ops.push_back(run_op("gaussian_upsample", cfg.op_tolerance, cfg, [&](Rng& rng, GradCheckStats& s) {
    const auto factor = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto h = static_cast<std::size_t>(rng.uniform_int(1, 4));
    const auto w = static_cast<std::size_t>(rng.uniform_int(1, 4));
    Tensor low = random_tensor({2, 1, h, w}, rng, 0.0, 2.0);
    const Tensor r = random_tensor({2, 1, h * factor, w * factor}, rng);
    auto f = [&] { return dot(r, gaussian_upsample(low, factor)); };
    record(s, check_entries(low, gaussian_upsample_backward(r, factor), f, step, all_entries(low)));
    return true;
  }));

  report.ops.push_back(run_op("pseudo_huber", cfg.op_tolerance, cfg, [&](Rng& rng, GradCheckStats& s) {
    Tensor z({1}, rng.uniform(-10.0, 10.0));
    Tensor g({1}, pseudo_huber_grad(z[0]));
    auto f = [&] { return pseudo_huber(z[0]); };
    record(s, check_entries(z, g, f, step, {0}));
    return true;
  }));

  report.ops.push_back(run_op("push", cfg.op_tolerance, cfg, [&](Rng& rng, GradCheckStats& s) {
    Tensor z({1}, std::exp(rng.uniform(std::log(0.05), std::log(20.0))));
    Tensor g({1}, push_grad(z[0]));
    auto f = [&] { return push(z[0]); };
    record(s, check_entries(z, g, f, step, {0}));
    return true;
  }));

  report.ops.push_back(run_op("loss.baseline", cfg.loss_tolerance, cfg, [&](Rng& r, GradCheckStats& s) {
    return loss_case(r, s, cfg, LossVariant::baseline);
  }));
  report.ops.push_back(run_op("loss.proposed", cfg.loss_tolerance, cfg, [&](Rng& r, GradCheckStats& s) {
    return loss_case(r, s, cfg, LossVariant::proposed);
  }));
  report.ops.push_back(run_op("network.baseline", cfg.network_tolerance, cfg, [&](Rng& r, GradCheckStats& s) {
    return network_case(r, s, cfg, LossVariant::baseline);
  }));
  report.ops.push_back(run_op("network.proposed", cfg.network_tolerance, cfg, [&](Rng& r, GradCheckStats& s) {
    return network_case(r, s, cfg, LossVariant::proposed);
  }));

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace hsseg
