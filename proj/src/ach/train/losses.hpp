// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ach/core/ops.hpp"

namespace ach {

// Elementwise binary cross-entropy on logits: softplus(z) - z*t. Stable for
// large |z|; `target` is a constant tensor of the same shape.
template <class S>
Tensor<S> bce_with_logits(const Tensor<S>& logits, const Tensor<S>& target);

// Sigmoid focal loss, summed and divided by max(1, sum(target)) so the scale
// tracks the number of positive elements rather than the anchor count.
template <class S>
Tensor<S> focal_loss(const Tensor<S>& logits, const Tensor<S>& target, S alpha = S(0.25),
                     S gamma = S(2));

// Per-class dice loss, 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps) with
// sums over batch and spatial dims. probs/target: [N, C, H, W]; returns [C].
template <class S>
Tensor<S> dice_per_class(const Tensor<S>& probs, const Tensor<S>& target, S eps = S(1));

// Mean of dice_per_class over classes.
template <class S>
Tensor<S> dice_loss(const Tensor<S>& probs, const Tensor<S>& target, S eps = S(1));

// Masked mean of -log_probs[label]. log_probs: [N, P, C]; labels/valid are
// flat row-major [N*P]. Throws when no point is valid.
template <class S>
Tensor<S> nll_loss(const Tensor<S>& log_probs, const std::vector<int>& labels,
                   const std::vector<uint8_t>& valid);

// Homoscedastic-uncertainty combination: sum_t exp(-s_t)*L_t + s_t.
// task_losses and log_vars are both [T].
template <class S>
Tensor<S> total_loss(const Tensor<S>& task_losses, const Tensor<S>& log_vars);

}  // namespace ach
