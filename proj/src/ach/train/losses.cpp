// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/train/losses.hpp"

#include <algorithm>
#include <stdexcept>

namespace ach {

template <class S>
Tensor<S> bce_with_logits(const Tensor<S>& logits, const Tensor<S>& target) {
  return sub(softplus(logits), mul(logits, target));
}

template <class S>
Tensor<S> focal_loss(const Tensor<S>& logits, const Tensor<S>& target, S alpha, S gamma) {
  if (logits.shape() != target.shape())
    throw std::invalid_argument("focal_loss: logit/target shape mismatch");
  Tensor<S> bce = bce_with_logits(logits, target);
  Tensor<S> p = sigmoid(logits);
  Tensor<S> one_minus_t = add_scalar(neg(target), S(1));
  // p_t: probability assigned to the true label, elementwise.
  Tensor<S> pt = add(mul(target, p), mul(one_minus_t, add_scalar(neg(p), S(1))));
  Tensor<S> at = add(mul_scalar(target, alpha), mul_scalar(one_minus_t, S(1) - alpha));
  // (1 - p_t)^gamma via exp/log; the clamp floor only matters for elements the
  // model already classifies perfectly (their bce is ~0 anyway).
  Tensor<S> mod =
      exp_op(mul_scalar(log_op(clamp(add_scalar(neg(pt), S(1)), S(1e-12), S(1))), gamma));
  Tensor<S> total = sum(mul(mul(at, mod), bce));
  S n_pos = S(0);
  for (S v : target.data()) n_pos += v;
  return mul_scalar(total, S(1) / std::max(S(1), n_pos));
}

template <class S>
Tensor<S> dice_per_class(const Tensor<S>& probs, const Tensor<S>& target, S eps) {
  if (probs.shape() != target.shape())
    throw std::invalid_argument("dice_per_class: shape mismatch");
  if (probs.ndim() != 4) throw std::invalid_argument("dice_per_class: expected [N,C,H,W]");
  Tensor<S> inter = sum_dims(mul(probs, target), {0, 2, 3}, false);
  Tensor<S> denom = add(sum_dims(probs, {0, 2, 3}, false), sum_dims(target, {0, 2, 3}, false));
  Tensor<S> dice = div(add_scalar(mul_scalar(inter, S(2)), eps), add_scalar(denom, eps));
  return add_scalar(neg(dice), S(1));
}

template <class S>
Tensor<S> dice_loss(const Tensor<S>& probs, const Tensor<S>& target, S eps) {
  return mean(dice_per_class(probs, target, eps));
}

template <class S>
Tensor<S> nll_loss(const Tensor<S>& log_probs, const std::vector<int>& labels,
                   const std::vector<uint8_t>& valid) {
  if (log_probs.ndim() != 3) throw std::invalid_argument("nll_loss: expected [N,P,C]");
  int64_t rows = log_probs.dim(0) * log_probs.dim(1);
  int64_t classes = log_probs.dim(2);
  if (static_cast<int64_t>(labels.size()) != rows ||
      static_cast<int64_t>(valid.size()) != rows)
    throw std::invalid_argument("nll_loss: labels/valid size mismatch");
  std::vector<S> pick(static_cast<size_t>(rows * classes), S(0));
  int64_t n_valid = 0;
  for (int64_t r = 0; r < rows; ++r) {
    if (!valid[r]) continue;
    if (labels[r] < 0 || labels[r] >= classes)
      throw std::invalid_argument("nll_loss: label out of range");
    pick[static_cast<size_t>(r * classes + labels[r])] = S(1);
    ++n_valid;
  }
  if (n_valid == 0) throw std::invalid_argument("nll_loss: no valid points");
  Tensor<S> onehot = Tensor<S>::from(log_probs.shape(), std::move(pick));
  return mul_scalar(sum(mul(log_probs, onehot)), S(-1) / static_cast<S>(n_valid));
}

template <class S>
Tensor<S> total_loss(const Tensor<S>& task_losses, const Tensor<S>& log_vars) {
  if (task_losses.shape() != log_vars.shape())
    throw std::invalid_argument("total_loss: losses/log_vars shape mismatch");
  return sum(add(mul(exp_op(neg(log_vars)), task_losses), log_vars));
}

#define ACH_INSTANTIATE(S)                                                                  \
  template Tensor<S> bce_with_logits<S>(const Tensor<S>&, const Tensor<S>&);                \
  template Tensor<S> focal_loss<S>(const Tensor<S>&, const Tensor<S>&, S, S);               \
  template Tensor<S> dice_per_class<S>(const Tensor<S>&, const Tensor<S>&, S);              \
  template Tensor<S> dice_loss<S>(const Tensor<S>&, const Tensor<S>&, S);                   \
  template Tensor<S> nll_loss<S>(const Tensor<S>&, const std::vector<int>&,                 \
                                 const std::vector<uint8_t>&);                              \
  template Tensor<S> total_loss<S>(const Tensor<S>&, const Tensor<S>&);
ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
