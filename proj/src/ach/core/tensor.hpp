// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ach/core/rng.hpp"

namespace ach {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

template <class S>
struct TensorImpl;

// One recorded operation on the tape. Owned by the output tensor; `backprop`
// reads the output gradient and accumulates into the parents' grad buffers.
template <class S>
struct Node {
  uint64_t seq = 0;
  std::vector<std::shared_ptr<TensorImpl<S>>> parents;
  std::function<void(const TensorImpl<S>&)> backprop;
};

template <class S>
struct TensorImpl {
  Shape shape;
  std::vector<S> data;
  std::vector<S> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<Node<S>> node;  // null for leaves and constants

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), S(0));
  }
};

// Scoped switch that disables tape recording (inference / evaluation paths).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

uint64_t next_seq();

// Value-semantics handle to a dense row-major tensor. Data is immutable after
// an op creates it, except grad buffers and explicit leaf mutation between
// optimizer steps.
template <class S>
class Tensor {
 public:
  using Scalar = S;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl<S>> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, S value, bool requires_grad = false);
  static Tensor ones(const Shape& shape, bool requires_grad = false) {
    return full(shape, S(1), requires_grad);
  }
  static Tensor from(const Shape& shape, std::vector<S> values, bool requires_grad = false);
  static Tensor scalar(S value, bool requires_grad = false) { return full({1}, value, requires_grad); }
  static Tensor uniform(const Shape& shape, S lo, S hi, Rng& rng, bool requires_grad = false);
  static Tensor normal(const Shape& shape, S mean, S stddev, Rng& rng, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t dim(int i) const {
    int n = static_cast<int>(impl_->shape.size());
    if (i < 0) i += n;
    return impl_->shape[i];
  }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int64_t numel() const { return impl_->numel(); }

  std::vector<S>& data() { return impl_->data; }
  const std::vector<S>& data() const { return impl_->data; }
  S* ptr() { return impl_->data.data(); }
  const S* ptr() const { return impl_->data.data(); }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool rg) {
    impl_->requires_grad = rg;
    return *this;
  }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::vector<S>& grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  const std::vector<S>& grad() const {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), S(0));
  }

  S item() const {
    if (numel() != 1) throw std::invalid_argument("item() requires a single-element tensor");
    return impl_->data[0];
  }

  // Same data, detached from the tape.
  Tensor detach() const {
    auto out = std::make_shared<TensorImpl<S>>();
    out->shape = impl_->shape;
    out->data = impl_->data;
    return Tensor(out);
  }

  // Reverse-mode accumulation from a scalar loss. Repeated calls without
  // zeroing the grads accumulate.
  void backward() const;

  std::shared_ptr<TensorImpl<S>> impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<S>> impl_;
};

// Attaches a tape node to `out` when recording is on and any parent needs a
// gradient. `backprop` accumulates into the parents.
template <class S>
void record(Tensor<S>& out, std::vector<Tensor<S>> parents,
            std::function<void(const TensorImpl<S>&)> backprop) {
  if (!grad_enabled()) return;
  bool needs = false;
  for (const auto& p : parents)
    if (p.requires_grad()) needs = true;
  if (!needs) return;
  auto node = std::make_shared<Node<S>>();
  node->seq = next_seq();
  node->parents.reserve(parents.size());
  for (auto& p : parents) node->parents.push_back(p.impl());
  node->backprop = std::move(backprop);
  out.impl()->node = node;
  out.impl()->requires_grad = true;
}

template <class S>
void accumulate_grad(TensorImpl<S>& t, const S* g, int64_t n) {
  t.ensure_grad();
  S* dst = t.grad.data();
  for (int64_t i = 0; i < n; ++i) dst[i] += g[i];
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace ach
