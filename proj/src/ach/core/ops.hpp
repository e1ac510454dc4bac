// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ach/core/tensor.hpp"

namespace ach {

// ---- binary elementwise, numpy-style broadcasting ----
template <class S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b);
// gradient routed to the winning side; ties go to `a`
template <class S> Tensor<S> minimum(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> maximum(const Tensor<S>& a, const Tensor<S>& b);

template <class S> Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b) { return add(a, b); }
template <class S> Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b) { return sub(a, b); }
template <class S> Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b) { return mul(a, b); }
template <class S> Tensor<S> operator/(const Tensor<S>& a, const Tensor<S>& b) { return div(a, b); }

// ---- scalar forms ----
template <class S> Tensor<S> add_scalar(const Tensor<S>& a, S c);
template <class S> Tensor<S> mul_scalar(const Tensor<S>& a, S c);
template <class S> Tensor<S> operator+(const Tensor<S>& a, S c) { return add_scalar(a, c); }
template <class S> Tensor<S> operator-(const Tensor<S>& a, S c) { return add_scalar(a, -c); }
template <class S> Tensor<S> operator*(const Tensor<S>& a, S c) { return mul_scalar(a, c); }
template <class S> Tensor<S> operator*(S c, const Tensor<S>& a) { return mul_scalar(a, c); }

// ---- unary ----
template <class S> Tensor<S> neg(const Tensor<S>& x);
template <class S> Tensor<S> exp_op(const Tensor<S>& x);
template <class S> Tensor<S> log_op(const Tensor<S>& x);
template <class S> Tensor<S> sqrt_op(const Tensor<S>& x);
template <class S> Tensor<S> sigmoid(const Tensor<S>& x);
template <class S> Tensor<S> silu(const Tensor<S>& x);
template <class S> Tensor<S> relu(const Tensor<S>& x);
// log(1 + exp(x)), stable
template <class S> Tensor<S> softplus(const Tensor<S>& x);
template <class S> Tensor<S> clamp(const Tensor<S>& x, S lo, S hi);

// ---- reductions ----
template <class S> Tensor<S> sum(const Tensor<S>& x);
template <class S> Tensor<S> mean(const Tensor<S>& x);
// reduce over `dims` (unique, ascending not required); keepdim keeps size-1 axes
template <class S> Tensor<S> sum_dims(const Tensor<S>& x, std::vector<int> dims, bool keepdim);
template <class S> Tensor<S> mean_dims(const Tensor<S>& x, std::vector<int> dims, bool keepdim);
// max over one axis, keepdim; gradient routed to the (first) argmax
template <class S> Tensor<S> max_dim(const Tensor<S>& x, int dim);

// ---- shape ----
template <class S> Tensor<S> reshape(const Tensor<S>& x, Shape shape);
template <class S> Tensor<S> permute(const Tensor<S>& x, const std::vector<int>& perm);
template <class S> Tensor<S> concat(const std::vector<Tensor<S>>& xs, int dim);
template <class S> Tensor<S> slice(const Tensor<S>& x, int dim, int64_t start, int64_t len);
// rows of a 2-D tensor; backward scatter-adds
template <class S> Tensor<S> gather_rows(const Tensor<S>& x, const std::vector<int64_t>& idx);

// ---- linear algebra ----
// a: [..., M, K], b: [..., K, N] with equal leading dims, or b: [K, N] shared
// across batches.
template <class S> Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

// ---- softmax family (along `dim`) ----
template <class S> Tensor<S> softmax(const Tensor<S>& x, int dim);
template <class S> Tensor<S> log_softmax(const Tensor<S>& x, int dim);

}  // namespace ach
