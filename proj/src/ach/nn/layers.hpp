// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ach/core/ops.hpp"
#include "ach/core/rng.hpp"
#include "ach/core/tensor.hpp"

namespace ach {

// Owns every learnable tensor of a model under a unique dotted name.
// Construction order is the canonical parameter order (checkpoints, EMA and
// the optimizer all iterate it).
template <class S>
class ParamStore {
 public:
  Tensor<S> add(const std::string& name, Tensor<S> t) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    t.set_requires_grad(true);
    index_.emplace(name, items_.size());
    items_.emplace_back(name, t);
    return t;
  }

  Tensor<S>* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &items_[it->second].second;
  }

  const std::vector<std::pair<std::string, Tensor<S>>>& items() const { return items_; }
  size_t size() const { return items_.size(); }

  int64_t element_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : items_) t.zero_grad();
  }

 private:
  std::vector<std::pair<std::string, Tensor<S>>> items_;
  std::unordered_map<std::string, size_t> index_;
};

// Convolution with kaiming-uniform init (bound 1/sqrt(fan_in)).
template <class S>
struct Conv2dLayer {
  Tensor<S> w, b;
  int stride = 1, pad = 0, groups = 1;

  Conv2dLayer() = default;
  Conv2dLayer(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, int k, int stride_,
              int pad_, int groups_, bool bias, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Group normalization over [N,C,H,W]; gamma/beta are stored [1,C,1,1].
template <class S>
struct GroupNormLayer {
  Tensor<S> gamma, beta;
  int groups = 1;
  S eps = static_cast<S>(1e-5);

  GroupNormLayer() = default;
  GroupNormLayer(ParamStore<S>& ps, const std::string& prefix, int channels, int groups_);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// conv -> group norm -> SiLU, the network's standard block glue.
template <class S>
struct ConvGnAct {
  Conv2dLayer<S> conv;
  GroupNormLayer<S> norm;
  bool act = true;

  ConvGnAct() = default;
  ConvGnAct(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, int k, int stride,
            int pad, int groups, Rng& rng, bool act_ = true, int norm_groups = 4);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Fully connected layer; weight stored [in, out] so x @ w needs no transpose.
template <class S>
struct LinearLayer {
  Tensor<S> w, b;

  LinearLayer() = default;
  LinearLayer(ParamStore<S>& ps, const std::string& prefix, int in, int out, bool bias, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Multi-head self-attention over token sequences [N,T,D]; the projection
// weights are bias-free [D,D] matrices, so a single-token sequence reduces to
// wo(wv(x)).
template <class S>
Tensor<S> mhsa(const Tensor<S>& x, int heads, const Tensor<S>& wq, const Tensor<S>& wk,
               const Tensor<S>& wv, const Tensor<S>& wo);

}  // namespace ach
