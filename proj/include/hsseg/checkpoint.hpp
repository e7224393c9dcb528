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

#include "hsseg/model.hpp"

namespace hsseg {

// Little-endian binary checkpoint:
//   char[8]  magic "HSSGCKPT"
//   u32      version (1)
//   u32      tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 extents[rank],
//               f64 values[prod(extents)]
// Loading checks names and shapes against the network architecture.
void save_checkpoint(const std::filesystem::path& path, const FcnParams& params);
FcnParams load_checkpoint(const std::filesystem::path& path);

}  // namespace hsseg
