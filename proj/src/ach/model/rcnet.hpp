// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "ach/model/config.hpp"
#include "ach/nn/layers.hpp"

namespace ach {

// avg pool 3x3 (count-exclude-pad) -> zero-initialized 3x3 offset predictor
// -> deformable 3x3 conv. At initialization the offsets are exactly zero, so
// the operator degenerates to avgpool + plain conv. With `deform` false the
// offset branch is bypassed entirely (the plain-conv ablation), which equals
// the zero-offset case but skips the dead computation.
template <class S>
struct RadarConv {
  Conv2dLayer<S> offset_conv;
  Tensor<S> w;  // deformable kernel [K,C,3,3]
  bool deform = true;

  RadarConv() = default;
  RadarConv(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, bool deform_,
            Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// 1x1 expand (act) -> RadarConv -> norm/act -> 1x1 project; residual when
// input and output widths match (they always do inside RCNet).
template <class S>
struct RcBlock {
  ConvGnAct<S> expand;
  RadarConv<S> radar;
  GroupNormLayer<S> norm;
  ConvGnAct<S> project;
  bool residual = false;

  RcBlock() = default;
  RcBlock(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, bool deform, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Radar feature branch: RVP map in, three maps out at strides 8/16/32 with
// quarter-width channels relative to the image encoder's C3..C5.
template <class S>
struct RcNet {
  ConvGnAct<S> stem, down1, down2, down3, down4;
  RcBlock<S> block8, block16, block32;

  RcNet() = default;
  RcNet(ParamStore<S>& ps, const std::string& prefix, const ModelConfig& cfg, Rng& rng);
  std::array<Tensor<S>, 3> forward(const Tensor<S>& rvp) const;
};

}  // namespace ach
