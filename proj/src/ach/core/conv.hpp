// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ach/core/tensor.hpp"

namespace ach {

// 2-D convolution, NCHW layout.
//   x: [N, Cin, H, W]   w: [Cout, Cin/groups, kh, kw]   b: [Cout] or undefined
// Output spatial size is (H + 2*pad - kh) / stride + 1 (floor).
// Backed by im2col + GEMM; a same-size 1x1 convolution skips the im2col.
template <class S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, int stride, int pad,
                 int groups = 1);

// Multiply-accumulate count for one conv2d invocation (forward pass).
int64_t conv2d_macs(const Shape& x, const Shape& w, int stride, int pad, int groups = 1);

}  // namespace ach
