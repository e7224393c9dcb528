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

#include "hsseg/tensor.hpp"

namespace hsseg {

// Binary PPM (P6, maxval 255) <-> Tensor[3,H,W] with values in [0,1].
void write_ppm(const std::filesystem::path& path, const Tensor& image);
Tensor read_ppm(const std::filesystem::path& path);

// Binary PGM (P5, maxval 255) <-> Tensor[1,H,W]. Masks are written as 0/255.
void write_pgm(const std::filesystem::path& path, const Tensor& plane);
Tensor read_pgm(const std::filesystem::path& path);

// Writes a mask (values in {0,1}) as 0/255 and reads it back to {0,1}.
void write_mask_pgm(const std::filesystem::path& path, const Tensor& mask);
Tensor read_mask_pgm(const std::filesystem::path& path);

// Min-max scales a single-channel map to 0..255 and writes it as PGM.
void write_heatmap_pgm(const std::filesystem::path& path, const Tensor& map);

std::uint8_t to_byte(double v);

}  // namespace hsseg
