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

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "hsseg/rng.hpp"
#include "hsseg/synth.hpp"
#include "hsseg/tensor.hpp"

namespace hsseg {

struct DatasetCounts {
  std::size_t train = 16;
  std::size_t test_normal = 8;
  std::size_t test_anomalous = 16;
};

// Layout under `root`:
//   manifest.json
//   <category>/train/normal_NNN.ppm
//   <category>/test/normal_NNN.ppm
//   <category>/test/anomalous_NNN.ppm + anomalous_NNN_mask.pgm
// Rejects an existing non-empty `root`. Output is byte-identical for a fixed seed.
nlohmann::ordered_json write_dataset(const std::filesystem::path& root,
                                     const std::vector<CategorySpec>& specs, std::uint64_t seed,
                                     const DatasetCounts& counts);

struct TestImage {
  Tensor image;  // raw [3,H,W] in [0,1]
  Tensor mask;   // [1,H,W]
  bool anomalous = false;
  AnomalyType type = AnomalyType::ellipse;
  std::string file;
};

struct CategoryData {
  CategorySpec spec;
  std::vector<Tensor> train;
  std::vector<TestImage> test;
};

nlohmann::ordered_json read_manifest(const std::filesystem::path& root);
std::vector<std::string> manifest_categories(const nlohmann::ordered_json& manifest);
CategoryData load_category(const std::filesystem::path& root, const nlohmann::ordered_json& manifest,
                           const std::string& category);

}  // namespace hsseg
