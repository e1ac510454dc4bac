// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ach/core/tensor.hpp"

namespace ach {

// Deformable 3x3 convolution, stride 1, pad 1 (the RadarConv configuration).
//   x: [N, C, H, W]   w: [K, C, 3, 3]   offsets: [N, 18, H, W]
// For kernel tap k (row-major over the 3x3 window), offset channel 2k holds
// the x displacement and channel 2k+1 the y displacement, added to the tap's
// base sampling position. Samples are bilinearly interpolated; out-of-bounds
// reads are zero, matching conv2d's zero padding. Differentiable w.r.t. the
// input, the weight and the offsets. With all-zero offsets the result equals
// conv2d(x, w, stride=1, pad=1) exactly.
template <class S>
Tensor<S> deformable_conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& offsets);

}  // namespace ach
