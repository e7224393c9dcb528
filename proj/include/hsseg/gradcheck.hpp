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

#include <cstdint>
#include <string>
#include <vector>

namespace hsseg {

// Relative error of an analytic gradient entry against its central finite
// difference, |a - n| / max(|a|, |n|, floor), where `floor` is 1e-3 times the
// largest finite-difference magnitude of the tensor being checked. Entries far
// below the tensor's gradient scale are thus measured against that scale.
double gradient_relative_error(double analytic, double numeric, double floor);

struct GradCheckStats {
  std::string op;
  int cases = 0;
  int skipped = 0;  // draws rejected for lying within 1e-4 of a ReLU/max-pool kink
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return cases > 0 && max_rel_error <= tolerance; }
};

struct GradCheckReport {
  std::vector<GradCheckStats> ops;
  double seconds = 0.0;
  bool passed() const;
};

struct GradCheckConfig {
  std::uint64_t seed = 7;
  int cases_per_op = 50;
  double step = 1e-5;
  double op_tolerance = 1e-6;       // conv, relu, pool, upsample, pseudo-Huber, push
  double loss_tolerance = 1e-7;     // training losses w.r.t. the score map
  double network_tolerance = 1e-5;  // end to end through the network
};

// Central-difference checks of every analytic gradient used in training:
// conv2d (input, weights, bias; padded, strided and 1x1 head), relu, maxpool2,
// Gaussian upsampling adjoint, pseudo-Huber, push, both training losses, and
// both losses end to end through the network and score map.
GradCheckReport run_gradient_checks(const GradCheckConfig& cfg = {});

}  // namespace hsseg
