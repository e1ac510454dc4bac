// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ach/core/tensor.hpp"

namespace ach {

// Self-describing binary checkpoint: magic "ACHL", u32 version, then for each
// tensor (u32 name length, name bytes, u32 rank, rank x u64 dims,
// little-endian f32 payload). Round-trips bit-exactly.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, TensorF>>& tensors);

// Loads every tensor in file order. Throws std::runtime_error on bad magic,
// unsupported version or a truncated file.
std::vector<std::pair<std::string, TensorF>> load_checkpoint(const std::string& path);

// Convenience: file order dropped, lookup by name.
std::map<std::string, TensorF> load_checkpoint_map(const std::string& path);

}  // namespace ach
