// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ach/core/tensor.hpp"

namespace ach {

enum class PoolKind { kAvg, kMax };

// 2-D window pooling, NCHW. Average pooling divides by the number of
// in-bounds taps (count-include-pad = false); max pooling ignores padding
// entirely and reduces over in-bounds taps only.
template <class S>
Tensor<S> pool2d(const Tensor<S>& x, PoolKind kind, int kernel, int stride, int pad);

// Nearest-neighbor 2x upsampling; the gradient of each input cell is the sum
// over its 2x2 output block.
template <class S>
Tensor<S> upsample2x(const Tensor<S>& x);

// Reshape C -> (g, C/g), transpose, flatten. Pure channel permutation.
template <class S>
Tensor<S> channel_shuffle(const Tensor<S>& x, int groups);

}  // namespace ach
