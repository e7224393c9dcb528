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

#include "hsseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

constexpr char kMagic[8] = {'H', 'S', 'S', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ValidationError("checkpoint " + path.string() + " is truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const FcnParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, FcnParams::kCount);
  const auto tensors = params.tensors();
  for (std::size_t k = 0; k < FcnParams::kCount; ++k) {
    const std::string_view name = FcnParams::kNames[k];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const Tensor& t = *tensors[k];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

FcnParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw ValidationError(path.string() + " is not an hsseg checkpoint");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get<std::uint32_t>(in, path);
  if (count != FcnParams::kCount) {
    throw ValidationError("checkpoint holds " + std::to_string(count) + " tensors, network has " +
                          std::to_string(FcnParams::kCount));
  }
  FcnParams params;
  const auto expected = FcnParams::shapes();
  auto tensors = params.tensors();
  for (std::size_t k = 0; k < FcnParams::kCount; ++k) {
    const auto len = get<std::uint32_t>(in, path);
    if (len > 256) throw ValidationError("checkpoint tensor name too long");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (name != FcnParams::kNames[k]) {
      throw ValidationError("checkpoint tensor " + std::to_string(k) + " is '" + name +
                            "', expected '" + std::string(FcnParams::kNames[k]) + "'");
    }
    const auto rank = get<std::uint32_t>(in, path);
    Tensor::Shape shape;
    for (std::uint32_t d = 0; d < rank && d < 8; ++d) {
      shape.push_back(static_cast<std::size_t>(get<std::uint64_t>(in, path)));
    }
    if (shape != expected[k]) {
      throw ShapeError("checkpoint/architecture mismatch for " + name + ": checkpoint " +
                       to_string(shape) + ", network " + to_string(expected[k]));
    }
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw ValidationError("checkpoint " + path.string() + " is truncated");
    *tensors[k] = std::move(t);
  }
  return params;
}

}  // namespace hsseg
