// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

namespace ach {

// Number of worker threads used by parallel_for. Defaults to the hardware
// concurrency capped at 4. Reductions stay sequential per output element, so
// results are identical for any thread count.
int num_threads();
void set_num_threads(int n);

// Splits [begin, end) into contiguous chunks, one per worker. fn(lo, hi) must
// only write locations derived from its own range.
void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace ach
