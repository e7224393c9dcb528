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

#include "hsseg/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hsseg/error.hpp"

namespace hsseg {

double pseudo_huber(double z) { return std::sqrt(z * z + 1.0) - 1.0; }

double pseudo_huber_grad(double z) { return z / std::sqrt(z * z + 1.0); }

Tensor pseudo_huber(const Tensor& z) {
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = pseudo_huber(z[i]);
  return out;
}

double push(double s) {
  if (!(s > 0.0)) {
    throw NumericalError("push: score " + std::to_string(s) +
                         " is not positive (p(0) is infinite)");
  }
  // Below ln 2, 1 - exp(-s) loses digits; above it, log(1 - x) with small x does.
  if (s < std::numbers::ln2) return -std::log(-std::expm1(-s));
  return -std::log1p(-std::exp(-s));
}

double push_grad(double s) {
  if (!(s > 0.0)) {
    throw NumericalError("push_grad: score " + std::to_string(s) + " is not positive");
  }
  return -1.0 / std::expm1(s);
}

namespace {

void check_features(const Tensor& features, const Tensor& center) {
  if (features.rank() != 2) {
    throw ShapeError("features: expected [n, d], got " + to_string(features.shape()));
  }
  require_shape(center, {features.dim(1)}, "center");
}

double squared_distance(const Tensor& features, std::size_t i, const Tensor& center) {
  const std::size_t d = features.dim(1);
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = features[i * d + k] - center[k];
    s += diff * diff;
  }
  return s;
}

void check_pair(const Tensor& scores, const Tensor& masks) {
  require_shape(masks, scores.shape(), "masks");
  if (scores.rank() < 2) {
    throw ShapeError("scores: expected a batch [n, ...], got " + to_string(scores.shape()));
  }
}

}  // namespace

double loss_deep_svdd(const Tensor& features, const Tensor& center) {
  check_features(features, center);
  const std::size_t n = features.dim(0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += squared_distance(features, i, center);
  return s / static_cast<double>(n);
}

double loss_hsc(const Tensor& features, const Tensor& center, const std::vector<int>& labels) {
  check_features(features, center);
  const std::size_t n = features.dim(0);
  if (labels.size() != n) {
    throw ShapeError("loss_hsc: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " samples");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = std::sqrt(squared_distance(features, i, center) + 1.0) - 1.0;
    if (labels[i] == 0) {
      s += h;
    } else if (labels[i] == 1) {
      if (h <= 0.0) {
        throw NumericalError("loss_hsc: anomalous sample " + std::to_string(i) +
                             " lies exactly at the center");
      }
      s += push(h);
    } else {
      throw ValidationError("loss_hsc: labels must be 0 or 1");
    }
  }
  return s / static_cast<double>(n);
}

PixelIndexSets pixel_index_sets(const Tensor& masks) {
  if (masks.rank() < 2) throw ShapeError("masks: expected a batch [n, ...]");
  const std::size_t n = masks.dim(0), m = masks.size() / n;
  PixelIndexSets sets;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double y = masks[i * m + j];
      if (y == 0.0) {
        sets.normal.push_back({i, j});
      } else if (y == 1.0) {
        sets.anomalous.push_back({i, j});
      } else {
        throw ValidationError("masks must be binary, found " + std::to_string(y));
      }
    }
  }
  return sets;
}

LossValue loss_fcdd_baseline(const Tensor& scores, const Tensor& masks) {
  check_pair(scores, masks);
  const std::size_t n = scores.dim(0), m = scores.size() / n;
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_m = 1.0 / static_cast<double>(m);
  LossValue r{0.0, Tensor(scores.shape())};
  for (std::size_t i = 0; i < n; ++i) {
    const double* a = scores.data() + i * m;
    const double* y = masks.data() + i * m;
    double normal = 0.0, anomalous = 0.0;
    std::size_t n_anomalous = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (y[j] != 0.0 && y[j] != 1.0) throw ValidationError("masks must be binary");
      normal += (1.0 - y[j]) * a[j];
      anomalous += y[j] * a[j];
      n_anomalous += y[j] == 1.0;
    }
    double term = normal * inv_m;
    double push_slope = 0.0;
    if (n_anomalous > 0) {
      const double pooled = anomalous * inv_m;
      term += push(pooled);
      push_slope = push_grad(pooled);
    }
    r.value += term;
    double* g = r.grad.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      g[j] = inv_n * inv_m * ((1.0 - y[j]) + y[j] * push_slope);
    }
  }
  r.value *= inv_n;
  return r;
}

LossValue loss_proposed(const Tensor& scores, const Tensor& masks, bool balance) {
  check_pair(scores, masks);
  const std::size_t total = scores.size();
  const PixelIndexSets sets = pixel_index_sets(masks);
  const double ratio = (!balance || sets.normal.empty() || sets.anomalous.empty())
                           ? 1.0
                           : static_cast<double>(sets.normal.size()) /
                                 static_cast<double>(sets.anomalous.size());
  const double inv = 1.0 / static_cast<double>(total);
  LossValue r{0.0, Tensor(scores.shape())};
  for (std::size_t k = 0; k < total; ++k) {
    const double a = scores[k];
    if (masks[k] == 0.0) {
      r.value += a;
      r.grad[k] = inv;
    } else {
      if (!(a > 0.0)) {
        throw NumericalError("loss_proposed: anomalous pixel " + std::to_string(k) +
                             " has score " + std::to_string(a) + " (push singularity)");
      }
      r.value += ratio * push(a);
      r.grad[k] = inv * ratio * push_grad(a);
    }
  }
  r.value *= inv;
  return r;
}

std::string loss_variant_name(LossVariant v) {
  return v == LossVariant::baseline ? "baseline" : "proposed";
}

LossVariant parse_loss_variant(const std::string& name) {
  if (name == "baseline") return LossVariant::baseline;
  if (name == "proposed") return LossVariant::proposed;
  throw ValidationError("unknown loss variant '" + name + "' (expected baseline|proposed)");
}

LossValue training_loss(LossVariant variant, const Tensor& scores, const Tensor& masks) {
  return variant == LossVariant::baseline ? loss_fcdd_baseline(scores, masks)
                                          : loss_proposed(scores, masks, true);
}

}  // namespace hsseg
