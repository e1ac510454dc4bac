// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>

namespace ach {

// Global multiply-accumulate meter. conv2d, deformable_conv2d and matmul add
// their forward-pass MAC counts; norm/activation/pooling traffic is not MACs
// and is excluded. FLOPs = 2 x MACs by the usual convention.
inline std::atomic<int64_t>& mac_counter() {
  static std::atomic<int64_t> counter{0};
  return counter;
}

inline void reset_macs() { mac_counter().store(0, std::memory_order_relaxed); }
inline void add_macs(int64_t n) { mac_counter().fetch_add(n, std::memory_order_relaxed); }
inline int64_t macs() { return mac_counter().load(std::memory_order_relaxed); }

}  // namespace ach
