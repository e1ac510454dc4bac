// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/model/rcnet.hpp"

#include <cmath>

#include "ach/core/conv.hpp"
#include "ach/core/deform.hpp"
#include "ach/core/pool.hpp"

namespace ach {

template <class S>
RadarConv<S>::RadarConv(ParamStore<S>& ps, const std::string& prefix, int cin, int cout,
                        bool deform_, Rng& rng)
    : deform(deform_) {
  offset_conv = Conv2dLayer<S>(ps, prefix + ".offset", cin, 18, 3, 1, 1, 1, /*bias=*/true, rng);
  // zero init: the operator starts as a plain convolution
  std::fill(offset_conv.w.data().begin(), offset_conv.w.data().end(), S(0));
  std::fill(offset_conv.b.data().begin(), offset_conv.b.data().end(), S(0));
  S bound = static_cast<S>(1.0 / std::sqrt(static_cast<double>(cin) * 9));
  w = ps.add(prefix + ".weight", Tensor<S>::uniform({cout, cin, 3, 3}, -bound, bound, rng));
}

template <class S>
Tensor<S> RadarConv<S>::forward(const Tensor<S>& x) const {
  Tensor<S> pooled = pool2d(x, PoolKind::kAvg, 3, 1, 1);
  if (!deform) return conv2d(pooled, w, Tensor<S>(), 1, 1);
  Tensor<S> offsets = offset_conv.forward(pooled);
  return deformable_conv2d(pooled, w, offsets);
}

template <class S>
RcBlock<S>::RcBlock(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, bool deform,
                    Rng& rng)
    : expand(ps, prefix + ".expand", cin, cin, 1, 1, 0, 1, rng),
      radar(ps, prefix + ".radar", cin, cin, deform, rng),
      norm(ps, prefix + ".norm", cin, 4),
      project(ps, prefix + ".project", cin, cout, 1, 1, 0, 1, rng, /*act=*/false),
      residual(cin == cout) {}

template <class S>
Tensor<S> RcBlock<S>::forward(const Tensor<S>& x) const {
  Tensor<S> y = expand.forward(x);
  y = silu(norm.forward(radar.forward(y)));
  y = project.forward(y);
  return residual ? add(y, x) : y;
}

template <class S>
RcNet<S>::RcNet(ParamStore<S>& ps, const std::string& prefix, const ModelConfig& cfg, Rng& rng) {
  auto rc = cfg.rcnet_channels();
  stem = ConvGnAct<S>(ps, prefix + ".stem", 3, 8, 3, 2, 1, 1, rng);
  down1 = ConvGnAct<S>(ps, prefix + ".down1", 8, rc[0], 3, 2, 1, 1, rng);
  down2 = ConvGnAct<S>(ps, prefix + ".down2", rc[0], rc[0], 3, 2, 1, 1, rng);
  block8 = RcBlock<S>(ps, prefix + ".block8", rc[0], rc[0], cfg.radar_deform, rng);
  down3 = ConvGnAct<S>(ps, prefix + ".down3", rc[0], rc[1], 3, 2, 1, 1, rng);
  block16 = RcBlock<S>(ps, prefix + ".block16", rc[1], rc[1], cfg.radar_deform, rng);
  down4 = ConvGnAct<S>(ps, prefix + ".down4", rc[1], rc[2], 3, 2, 1, 1, rng);
  block32 = RcBlock<S>(ps, prefix + ".block32", rc[2], rc[2], cfg.radar_deform, rng);
}

template <class S>
std::array<Tensor<S>, 3> RcNet<S>::forward(const Tensor<S>& rvp) const {
  Tensor<S> x = down2.forward(down1.forward(stem.forward(rvp)));
  Tensor<S> r8 = block8.forward(x);
  Tensor<S> r16 = block16.forward(down3.forward(r8));
  Tensor<S> r32 = block32.forward(down4.forward(r16));
  return {r8, r16, r32};
}

#define ACH_INSTANTIATE(S)      \
  template struct RadarConv<S>; \
  template struct RcBlock<S>;   \
  template struct RcNet<S>;

ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
