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

#include "hsseg/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "hsseg/error.hpp"
#include "hsseg/pnm.hpp"

namespace hsseg {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string numbered(const char* stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu", stem, i);
  return buf;
}

ordered_json spec_json(const CategorySpec& s) {
  ordered_json j;
  j["family"] = family_name(s.family);
  j["scale"] = s.scale;
  j["orientation"] = s.orientation;
  j["color_a"] = s.color_a;
  j["color_b"] = s.color_b;
  j["noise_amplitude"] = s.noise_amplitude;
  return j;
}

ordered_json write_category(const fs::path& root, const CategorySpec& spec, const Rng& rng,
                            const DatasetCounts& counts) {
  const std::string name = spec.name();
  fs::create_directories(root / name / "train");
  fs::create_directories(root / name / "test");
  ordered_json entries = ordered_json::array();
  std::uint64_t index = 0;

  for (std::size_t i = 0; i < counts.train; ++i, ++index) {
    const std::string rel = name + "/train/" + numbered("normal", i) + ".ppm";
    write_ppm(root / rel, gen_normal_image(spec, rng, index));
    entries.push_back({{"file", rel}, {"role", "train"}, {"index", index}});
  }
  for (std::size_t i = 0; i < counts.test_normal; ++i, ++index) {
    const std::string rel = name + "/test/" + numbered("normal", i) + ".ppm";
    write_ppm(root / rel, gen_normal_image(spec, rng, index));
    entries.push_back({{"file", rel}, {"role", "test_normal"}, {"index", index}});
  }
  for (std::size_t i = 0; i < counts.test_anomalous; ++i, ++index) {
    const auto type = static_cast<AnomalyType>(i % kNumAnomalyTypes);
    Rng stamp_rng = rng.substream("test-anomaly", static_cast<std::uint64_t>(spec.category_id), i);
    StampConfig cfg;
    cfg.type = type;
    AnomalyResult r = stamp_test_anomaly(gen_normal_image(spec, rng, index), stamp_rng, cfg);
    const std::string stem = name + "/test/" + numbered("anomalous", i);
    write_ppm(root / (stem + ".ppm"), r.image);
    write_mask_pgm(root / (stem + "_mask.pgm"), r.mask);
    entries.push_back({{"file", stem + ".ppm"},
                       {"role", "test_anomalous"},
                       {"index", index},
                       {"anomaly_type", anomaly_type_name(type)},
                       {"mask", stem + "_mask.pgm"}});
  }

  ordered_json cat;
  cat["id"] = spec.category_id;
  cat["name"] = name;
  cat["params"] = spec_json(spec);
  cat["entries"] = std::move(entries);
  return cat;
}

}  // namespace

ordered_json write_dataset(const fs::path& root, const std::vector<CategorySpec>& specs,
                           std::uint64_t seed, const DatasetCounts& counts) {
  if (specs.empty()) throw ValidationError("write_dataset: no categories");
  if (counts.train == 0) throw ValidationError("write_dataset: train count must be positive");
  std::error_code ec;
  if (fs::exists(root, ec)) {
    if (!fs::is_directory(root, ec)) {
      throw ValidationError("dataset root " + root.string() + " exists and is not a directory");
    }
    if (!fs::is_empty(root, ec)) {
      throw ValidationError("dataset root " + root.string() + " is not empty");
    }
  }
  fs::create_directories(root, ec);
  if (ec) throw ValidationError("cannot create " + root.string() + ": " + ec.message());

  const Rng rng(seed);
  std::vector<ordered_json> cats(specs.size());
  std::string failure;
  const long n = static_cast<long>(specs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      cats[static_cast<std::size_t>(i)] = write_category(root, specs[static_cast<std::size_t>(i)], rng, counts);
    } catch (const std::exception& e) {
#pragma omp critical
      failure = e.what();
    }
  }
  if (!failure.empty()) throw ValidationError("write_dataset: " + failure);

  ordered_json manifest;
  manifest["format"] = "hsseg-dataset";
  manifest["version"] = 1;
  manifest["seed"] = seed;
  manifest["image_size"] = specs.front().image_size;
  manifest["counts"] = {{"train", counts.train},
                        {"test_normal", counts.test_normal},
                        {"test_anomalous", counts.test_anomalous}};
  manifest["categories"] = ordered_json::array();
  for (auto& c : cats) manifest["categories"].push_back(std::move(c));

  std::ofstream out(root / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write manifest in " + root.string());
  out << manifest.dump(2) << '\n';
  return manifest;
}

ordered_json read_manifest(const fs::path& root) {
  std::ifstream in(root / "manifest.json", std::ios::binary);
  if (!in) throw ValidationError("no manifest.json under " + root.string());
  ordered_json m;
  try {
    m = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "hsseg-dataset" || !m.contains("categories")) {
    throw ValidationError("manifest.json under " + root.string() + " is not an hsseg dataset");
  }
  return m;
}

std::vector<std::string> manifest_categories(const ordered_json& manifest) {
  std::vector<std::string> names;
  for (const auto& c : manifest.at("categories")) names.push_back(c.at("name").get<std::string>());
  return names;
}

CategoryData load_category(const fs::path& root, const ordered_json& manifest,
                           const std::string& category) {
  for (const auto& c : manifest.at("categories")) {
    if (c.at("name") != category) continue;
    CategoryData data;
    data.spec = make_category(c.at("id").get<int>(), manifest.at("image_size").get<std::size_t>());
    for (const auto& e : c.at("entries")) {
      const std::string role = e.at("role");
      const std::string file = e.at("file");
      if (role == "train") {
        data.train.push_back(read_ppm(root / file));
      } else if (role == "test_normal" || role == "test_anomalous") {
        TestImage t;
        t.image = read_ppm(root / file);
        t.file = file;
        t.anomalous = role == "test_anomalous";
        if (t.anomalous) {
          t.mask = read_mask_pgm(root / e.at("mask").get<std::string>());
          t.type = parse_anomaly_type(e.at("anomaly_type"));
        } else {
          t.mask = Tensor({1, t.image.dim(1), t.image.dim(2)});
        }
        data.test.push_back(std::move(t));
      } else {
        throw ValidationError("manifest: unknown role '" + role + "'");
      }
    }
    if (data.train.empty()) throw ValidationError("category " + category + " has no training images");
    return data;
  }
  throw ValidationError("category '" + category + "' not in manifest");
}

}  // namespace hsseg
