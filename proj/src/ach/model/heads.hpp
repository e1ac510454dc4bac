// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "ach/model/config.hpp"
#include "ach/model/neck.hpp"
#include "ach/nn/layers.hpp"

namespace ach {

inline constexpr std::array<int, 3> kDetStrides = {8, 16, 32};

// Per-level detection maps. cls/reg/obj hold levels at strides 8, 16, 32.
template <class S>
struct DetPrediction {
  std::array<Tensor<S>, 3> cls;  // [N,7,Hl,Wl]
  std::array<Tensor<S>, 3> reg;  // [N,4,Hl,Wl] (dx,dy,dw,dh)
  std::array<Tensor<S>, 3> obj;  // [N,1,Hl,Wl]
};

// Depthwise 3x3 + pointwise 1x1, each with norm+SiLU.
template <class S>
struct DwSepBlock {
  ConvGnAct<S> dw, pw;

  DwSepBlock() = default;
  DwSepBlock(ParamStore<S>& ps, const std::string& prefix, int channels, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Decoupled anchor-free head: per-level 1x1 stems bring the radar-widened
// pyramid levels to a common width; the two branches (classification;
// regression+objectness) are shared across levels and built from
// depthwise-separable 3x3 convolutions.
template <class S>
struct DetHead {
  std::array<ConvGnAct<S>, 3> stems;
  std::array<DwSepBlock<S>, 2> cls_branch, reg_branch;
  Conv2dLayer<S> cls_out, reg_out, obj_out;

  DetHead() = default;
  DetHead(ParamStore<S>& ps, const std::string& prefix, const std::array<int, 3>& in_channels,
          int width, Rng& rng);
  DetPrediction<S> forward(const std::array<Tensor<S>, 3>& levels) const;
};

// 3x3 conv at stride 4, two 2x upsamples, 1x1 classifier at full resolution.
template <class S>
struct SegHead {
  ConvGnAct<S> conv;
  Conv2dLayer<S> classifier;

  SegHead() = default;
  SegHead(ParamStore<S>& ps, const std::string& prefix, int cin, int width, int classes,
          Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Point-cloud segmentation over [N,P,5] (x,y,z,velocity,power) clouds with a
// validity mask [N,P]. Channel widths are one third (rounded up) of the
// cited design's; padded points are excluded from the global max-pool.
template <class S>
struct PointNetSeg {
  struct Mlp {
    LinearLayer<S> lin;
    GroupNormLayer<S> norm;
  };
  std::vector<Mlp> point_mlp;  // 5 -> 22 -> 22 -> 22 -> 43 -> 342
  std::vector<Mlp> seg_mlp;    // 364 -> 171 -> 86 -> 43
  LinearLayer<S> classifier;   // 43 -> 8

  static constexpr int kLocalChannels = 22;
  static constexpr int kGlobalChannels = 342;

  PointNetSeg() = default;
  PointNetSeg(ParamStore<S>& ps, const std::string& prefix, Rng& rng);
  // points [N,P,5], mask [N,P] (1 = real point, 0 = padding) -> logits [N,P,8]
  Tensor<S> forward(const Tensor<S>& points, const Tensor<S>& mask) const;
};

}  // namespace ach
