// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/nn/layers.hpp"

#include <cmath>

#include "ach/core/conv.hpp"

namespace ach {

template <class S>
Conv2dLayer<S>::Conv2dLayer(ParamStore<S>& ps, const std::string& prefix, int cin, int cout,
                            int k, int stride_, int pad_, int groups_, bool bias, Rng& rng)
    : stride(stride_), pad(pad_), groups(groups_) {
  S bound = static_cast<S>(1.0 / std::sqrt(static_cast<double>(cin / groups_) * k * k));
  w = ps.add(prefix + ".weight",
             Tensor<S>::uniform({cout, cin / groups_, k, k}, -bound, bound, rng));
  if (bias) b = ps.add(prefix + ".bias", Tensor<S>::uniform({cout}, -bound, bound, rng));
}

template <class S>
Tensor<S> Conv2dLayer<S>::forward(const Tensor<S>& x) const {
  return conv2d(x, w, b, stride, pad, groups);
}

template <class S>
GroupNormLayer<S>::GroupNormLayer(ParamStore<S>& ps, const std::string& prefix, int channels,
                                  int groups_)
    : groups(groups_) {
  if (channels % groups_ != 0)
    throw std::invalid_argument("group norm: channels not divisible by groups");
  gamma = ps.add(prefix + ".gamma", Tensor<S>::ones({1, channels, 1, 1}));
  beta = ps.add(prefix + ".beta", Tensor<S>::zeros({1, channels, 1, 1}));
}

template <class S>
Tensor<S> GroupNormLayer<S>::forward(const Tensor<S>& x) const {
  const Shape& s = x.shape();
  if (s.size() != 4) throw std::invalid_argument("group norm expects NCHW");
  Tensor<S> flat = reshape(x, {s[0], groups, -1});
  Tensor<S> mu = mean_dims(flat, {2}, true);
  Tensor<S> centered = sub(flat, mu);
  Tensor<S> var = mean_dims(mul(centered, centered), {2}, true);
  Tensor<S> normed = div(centered, sqrt_op(add_scalar(var, eps)));
  return add(mul(reshape(normed, s), gamma), beta);
}

template <class S>
ConvGnAct<S>::ConvGnAct(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, int k,
                        int stride, int pad, int groups, Rng& rng, bool act_, int norm_groups)
    : conv(ps, prefix + ".conv", cin, cout, k, stride, pad, groups, /*bias=*/false, rng),
      norm(ps, prefix + ".norm", cout, norm_groups),
      act(act_) {}

template <class S>
Tensor<S> ConvGnAct<S>::forward(const Tensor<S>& x) const {
  Tensor<S> y = norm.forward(conv.forward(x));
  return act ? silu(y) : y;
}

template <class S>
LinearLayer<S>::LinearLayer(ParamStore<S>& ps, const std::string& prefix, int in, int out,
                            bool bias, Rng& rng) {
  S bound = static_cast<S>(1.0 / std::sqrt(static_cast<double>(in)));
  w = ps.add(prefix + ".weight", Tensor<S>::uniform({in, out}, -bound, bound, rng));
  if (bias) b = ps.add(prefix + ".bias", Tensor<S>::uniform({out}, -bound, bound, rng));
}

template <class S>
Tensor<S> LinearLayer<S>::forward(const Tensor<S>& x) const {
  Tensor<S> y = matmul(x, w);
  return b.defined() ? add(y, b) : y;
}

template <class S>
Tensor<S> mhsa(const Tensor<S>& x, int heads, const Tensor<S>& wq, const Tensor<S>& wk,
               const Tensor<S>& wv, const Tensor<S>& wo) {
  const Shape& s = x.shape();
  if (s.size() != 3) throw std::invalid_argument("mhsa expects [N,T,D]");
  int64_t N = s[0], T = s[1], D = s[2];
  if (D % heads != 0) throw std::invalid_argument("mhsa: D not divisible by heads");
  int64_t d = D / heads;
  auto split = [&](const Tensor<S>& proj) {
    // [N,T,D] -> [N*h,T,d]
    return reshape(permute(reshape(proj, {N, T, heads, d}), {0, 2, 1, 3}), {N * heads, T, d});
  };
  Tensor<S> q = split(matmul(x, wq));
  Tensor<S> k = split(matmul(x, wk));
  Tensor<S> v = split(matmul(x, wv));
  Tensor<S> scores =
      mul_scalar(matmul(q, permute(k, {0, 2, 1})), static_cast<S>(1.0 / std::sqrt(double(d))));
  Tensor<S> att = softmax(scores, 2);
  Tensor<S> ctx = matmul(att, v);  // [N*h,T,d]
  Tensor<S> merged =
      reshape(permute(reshape(ctx, {N, heads, T, d}), {0, 2, 1, 3}), {N, T, D});
  return matmul(merged, wo);
}

#define ACH_INSTANTIATE(S)           \
  template struct Conv2dLayer<S>;    \
  template struct GroupNormLayer<S>; \
  template struct ConvGnAct<S>;      \
  template struct LinearLayer<S>;    \
  template Tensor<S> mhsa(const Tensor<S>&, int, const Tensor<S>&, const Tensor<S>&,             \
                          const Tensor<S>&, const Tensor<S>&);

ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
