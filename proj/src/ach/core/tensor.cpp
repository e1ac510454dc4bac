// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/core/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

namespace ach {

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
std::atomic<uint64_t> g_seq{1};
}  // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

uint64_t next_seq() { return g_seq.fetch_add(1, std::memory_order_relaxed); }

template <class S>
Tensor<S> Tensor<S>::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, S(0), requires_grad);
}

template <class S>
Tensor<S> Tensor<S>::full(const Shape& shape, S value, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl<S>>();
  impl->shape = shape;
  impl->data.assign(shape_numel(shape), value);
  impl->requires_grad = requires_grad;
  return Tensor<S>(impl);
}

template <class S>
Tensor<S> Tensor<S>::from(const Shape& shape, std::vector<S> values, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size()))
    throw std::invalid_argument("from(): " + shape_str(shape) + " does not hold " +
                                std::to_string(values.size()) + " values");
  auto impl = std::make_shared<TensorImpl<S>>();
  impl->shape = shape;
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor<S>(impl);
}

template <class S>
Tensor<S> Tensor<S>::uniform(const Shape& shape, S lo, S hi, Rng& rng, bool requires_grad) {
  auto t = zeros(shape, requires_grad);
  for (auto& v : t.data()) v = static_cast<S>(rng.uniform(lo, hi));
  return t;
}

template <class S>
Tensor<S> Tensor<S>::normal(const Shape& shape, S mean, S stddev, Rng& rng, bool requires_grad) {
  auto t = zeros(shape, requires_grad);
  for (auto& v : t.data()) v = static_cast<S>(rng.normal(mean, stddev));
  return t;
}

template <class S>
void Tensor<S>::backward() const {
  if (numel() != 1) throw std::invalid_argument("backward() requires a scalar loss");

  // Collect every impl reachable through the tape, then replay in reverse
  // recording order (a valid topological order: inputs precede outputs).
  std::vector<std::shared_ptr<TensorImpl<S>>> order;
  std::unordered_set<const TensorImpl<S>*> seen;
  std::vector<std::shared_ptr<TensorImpl<S>>> stack{impl_};
  seen.insert(impl_.get());
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    if (cur->node) {
      order.push_back(cur);
      for (auto& p : cur->node->parents)
        if (seen.insert(p.get()).second) stack.push_back(p);
    }
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->node->seq > b->node->seq; });
  // Interior grads are per-pass scratch; only leaves accumulate across calls.
  for (auto& t : order) {
    t->ensure_grad();
    std::fill(t->grad.begin(), t->grad.end(), S(0));
  }
  impl_->ensure_grad();
  impl_->grad[0] = S(1);
  for (auto& t : order) t->node->backprop(*t);
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace ach
