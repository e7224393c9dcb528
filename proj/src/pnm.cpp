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

#include "hsseg/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "hsseg/error.hpp"

namespace hsseg {

namespace {

void write_pnm(const std::filesystem::path& path, const char* magic, std::size_t w, std::size_t h,
               const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << magic << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed: " + path.string());
}

std::size_t read_header_int(std::istream& in, const std::filesystem::path& path) {
  // Skip whitespace and '#' comments.
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  long v = -1;
  in >> v;
  if (!in || v <= 0) throw ValidationError("malformed PNM header in " + path.string());
  return static_cast<std::size_t>(v);
}

std::vector<std::uint8_t> read_pnm(const std::filesystem::path& path, const std::string& magic,
                                   std::size_t channels, std::size_t& w, std::size_t& h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string m;
  in >> m;
  if (m != magic) throw ValidationError(path.string() + ": expected " + magic + ", got " + m);
  w = read_header_int(in, path);
  h = read_header_int(in, path);
  const std::size_t maxval = read_header_int(in, path);
  if (maxval != 255) throw ValidationError(path.string() + ": only maxval 255 is supported");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> bytes(w * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw ValidationError(path.string() + ": truncated pixel data");
  }
  return bytes;
}

}  // namespace

std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("write_ppm: expected [3,H,W], got " + to_string(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2), plane = h * w;
  std::vector<std::uint8_t> bytes(3 * plane);
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) bytes[3 * p + c] = to_byte(image[c * plane + p]);
  }
  write_pnm(path, "P6", w, h, bytes);
}

Tensor read_ppm(const std::filesystem::path& path) {
  std::size_t w = 0, h = 0;
  const auto bytes = read_pnm(path, "P6", 3, w, h);
  const std::size_t plane = w * h;
  Tensor image({3, h, w});
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) image[c * plane + p] = bytes[3 * p + c] / 255.0;
  }
  return image;
}

void write_pgm(const std::filesystem::path& path, const Tensor& plane) {
  if (plane.rank() != 3 || plane.dim(0) != 1) {
    throw ShapeError("write_pgm: expected [1,H,W], got " + to_string(plane.shape()));
  }
  std::vector<std::uint8_t> bytes(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) bytes[i] = to_byte(plane[i]);
  write_pnm(path, "P5", plane.dim(2), plane.dim(1), bytes);
}

Tensor read_pgm(const std::filesystem::path& path) {
  std::size_t w = 0, h = 0;
  const auto bytes = read_pnm(path, "P5", 1, w, h);
  Tensor plane({1, h, w});
  for (std::size_t i = 0; i < bytes.size(); ++i) plane[i] = bytes[i] / 255.0;
  return plane;
}

void write_mask_pgm(const std::filesystem::path& path, const Tensor& mask) { write_pgm(path, mask); }

Tensor read_mask_pgm(const std::filesystem::path& path) {
  Tensor m = read_pgm(path);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = m[i] >= 0.5 ? 1.0 : 0.0;
  return m;
}

void write_heatmap_pgm(const std::filesystem::path& path, const Tensor& map) {
  Tensor plane = map.reshaped({1, map.dim(map.rank() - 2), map.dim(map.rank() - 1)});
  const auto [lo, hi] = std::minmax_element(plane.values().begin(), plane.values().end());
  const double mn = *lo, range = *hi - *lo;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    plane[i] = range > 0.0 ? (plane[i] - mn) / range : 0.0;
  }
  write_pgm(path, plane);
}

}  // namespace hsseg
