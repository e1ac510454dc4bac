// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/model/heads.hpp"

#include <algorithm>
#include <cmath>

#include "ach/core/ops.hpp"
#include "ach/core/pool.hpp"

namespace ach {

template <class S>
DwSepBlock<S>::DwSepBlock(ParamStore<S>& ps, const std::string& prefix, int channels, Rng& rng) {
  dw = ConvGnAct<S>(ps, prefix + ".dw", channels, channels, 3, 1, 1, channels, rng);
  pw = ConvGnAct<S>(ps, prefix + ".pw", channels, channels, 1, 1, 0, 1, rng);
}

template <class S>
Tensor<S> DwSepBlock<S>::forward(const Tensor<S>& x) const {
  return pw.forward(dw.forward(x));
}

template <class S>
DetHead<S>::DetHead(ParamStore<S>& ps, const std::string& prefix,
                    const std::array<int, 3>& in_channels, int width, Rng& rng) {
  for (int l = 0; l < 3; ++l)
    stems[l] = ConvGnAct<S>(ps, prefix + ".stem" + std::to_string(l), in_channels[l], width, 1,
                            1, 0, 1, rng);
  for (int i = 0; i < 2; ++i) {
    cls_branch[i] = DwSepBlock<S>(ps, prefix + ".cls" + std::to_string(i), width, rng);
    reg_branch[i] = DwSepBlock<S>(ps, prefix + ".reg" + std::to_string(i), width, rng);
  }
  cls_out = Conv2dLayer<S>(ps, prefix + ".cls_out", width, kNumTargetClasses, 1, 1, 0, 1,
                           /*bias=*/true, rng);
  reg_out = Conv2dLayer<S>(ps, prefix + ".reg_out", width, 4, 1, 1, 0, 1, /*bias=*/true, rng);
  obj_out = Conv2dLayer<S>(ps, prefix + ".obj_out", width, 1, 1, 1, 0, 1, /*bias=*/true, rng);
  // Start classification/objectness at a low prior (sigmoid ~= 0.01) so the
  // focal loss is not swamped by the background sea early in training.
  const S prior = static_cast<S>(-std::log(99.0));
  std::fill(cls_out.b.data().begin(), cls_out.b.data().end(), prior);
  std::fill(obj_out.b.data().begin(), obj_out.b.data().end(), prior);
}

template <class S>
DetPrediction<S> DetHead<S>::forward(const std::array<Tensor<S>, 3>& levels) const {
  DetPrediction<S> out;
  for (int l = 0; l < 3; ++l) {
    Tensor<S> t = stems[l].forward(levels[l]);
    Tensor<S> c = cls_branch[1].forward(cls_branch[0].forward(t));
    Tensor<S> r = reg_branch[1].forward(reg_branch[0].forward(t));
    out.cls[l] = cls_out.forward(c);
    out.reg[l] = reg_out.forward(r);
    out.obj[l] = obj_out.forward(r);
  }
  return out;
}

template <class S>
SegHead<S>::SegHead(ParamStore<S>& ps, const std::string& prefix, int cin, int width,
                    int classes, Rng& rng) {
  conv = ConvGnAct<S>(ps, prefix + ".conv", cin, width, 3, 1, 1, 1, rng);
  classifier =
      Conv2dLayer<S>(ps, prefix + ".classifier", width, classes, 1, 1, 0, 1, /*bias=*/true, rng);
}

template <class S>
Tensor<S> SegHead<S>::forward(const Tensor<S>& x) const {
  return classifier.forward(upsample2x(upsample2x(conv.forward(x))));
}

template <class S>
PointNetSeg<S>::PointNetSeg(ParamStore<S>& ps, const std::string& prefix, Rng& rng) {
  auto make = [&](std::vector<Mlp>& dst, const std::string& tag, int cin,
                  const std::vector<int>& widths) {
    for (size_t i = 0; i < widths.size(); ++i) {
      std::string p = prefix + "." + tag + std::to_string(i);
      Mlp m;
      m.lin = LinearLayer<S>(ps, p + ".lin", cin, widths[i], /*bias=*/true, rng);
      m.norm = GroupNormLayer<S>(ps, p + ".norm", widths[i], 1);
      dst.push_back(std::move(m));
      cin = widths[i];
    }
  };
  make(point_mlp, "point", 5, {22, 22, 22, 43, kGlobalChannels});
  make(seg_mlp, "seg", kLocalChannels + kGlobalChannels, {171, 86, 43});
  classifier = LinearLayer<S>(ps, prefix + ".classifier", 43, kPointClasses, /*bias=*/true, rng);
}

template <class S>
Tensor<S> PointNetSeg<S>::forward(const Tensor<S>& points, const Tensor<S>& mask) const {
  const Shape& s = points.shape();
  if (s.size() != 3 || s[2] != 5)
    throw std::invalid_argument("pointnet expects [N,P,5] input clouds");
  int64_t N = s[0], P = s[1];
  if (mask.shape() != Shape{N, P}) throw std::invalid_argument("pointnet mask must be [N,P]");
  for (int64_t n = 0; n < N; ++n) {
    S valid = 0;
    for (int64_t p = 0; p < P; ++p) valid += mask.data()[n * P + p];
    if (valid == S(0)) throw std::invalid_argument("pointnet: cloud with no valid points");
  }

  // Per-point MLPs run on the flattened [N*P, C] matrix; the per-point norm
  // (one group over all channels) keeps every point independent, which is
  // what makes the network exactly permutation-equivariant.
  auto run = [&](Tensor<S> x, const std::vector<Mlp>& mlps, int from, int upto) {
    for (int i = from; i < upto; ++i) {
      x = mlps[i].lin.forward(x);
      int64_t c = x.shape()[1];
      x = reshape(mlps[i].norm.forward(reshape(x, {N * P, c, 1, 1})), {N * P, c});
      x = relu(x);
    }
    return x;
  };
  Tensor<S> flat = reshape(points, {N * P, 5});
  Tensor<S> local = run(flat, point_mlp, 0, 2);   // [N*P, 22]
  Tensor<S> high = run(local, point_mlp, 2,
                       static_cast<int>(point_mlp.size()));  // [N*P, 342]

  // Masked global max: padded points are pushed far below any real activation
  // so they can never win the pool.
  Tensor<S> m = reshape(mask, {N, P, 1});
  Tensor<S> gated = add(reshape(high, {N, P, kGlobalChannels}),
                        mul_scalar(add_scalar(m, S(-1)), S(1e9)));
  Tensor<S> global = max_dim(gated, 1);                              // [N,1,342]
  Tensor<S> tiled = concat<S>(std::vector<Tensor<S>>(P, global), 1); // [N,P,342]

  Tensor<S> joint = reshape(
      concat<S>({reshape(local, {N, P, kLocalChannels}), tiled}, 2),
      {N * P, kLocalChannels + kGlobalChannels});
  Tensor<S> y = run(joint, seg_mlp, 0, static_cast<int>(seg_mlp.size()));
  return reshape(classifier.forward(y), {N, P, kPointClasses});
}

#define ACH_INSTANTIATE(S)        \
  template struct DwSepBlock<S>;  \
  template struct DetHead<S>;     \
  template struct SegHead<S>;     \
  template struct PointNetSeg<S>;

ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
