// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "ach/model/config.hpp"
#include "ach/model/encoder.hpp"
#include "ach/nn/layers.hpp"

namespace ach {

// Half the outputs from a 1x1 conv, the other half from a raw depthwise 3x3
// on those (an identity cheap kernel duplicates the first half exactly).
template <class S>
struct GhostModule {
  ConvGnAct<S> primary;
  Conv2dLayer<S> cheap;

  GhostModule() = default;
  GhostModule(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Channel-split block: two 1x1 halves, one routed through n bottleneck units
// (1x1 -> 3x3, residual), re-merged by a 1x1 fuse.
template <class S>
struct CspBlock {
  struct Bottleneck {
    ConvGnAct<S> a, b;
  };
  ConvGnAct<S> split_skip, split_main, fuse;
  std::vector<Bottleneck> bottlenecks;

  CspBlock() = default;
  CspBlock(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, int n, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Variant-dispatched fusion block used at every FPN merge point.
template <class S>
struct FusionBlock {
  NeckVariant variant = NeckVariant::kGhost;
  GhostModule<S> ghost;
  CspBlock<S> csp;

  FusionBlock() = default;
  FusionBlock(ParamStore<S>& ps, const std::string& prefix, int cin, int cout,
              NeckVariant variant_, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Grouped channel+spatial gating followed by a channel shuffle. Gate weights
// are shared across the g groups (each group is processed as its own sample).
template <class S>
struct ShuffleAttention {
  Tensor<S> cweight, cbias, sweight, sbias;
  GroupNormLayer<S> norm;
  int groups = 4;

  ShuffleAttention() = default;
  ShuffleAttention(ParamStore<S>& ps, const std::string& prefix, int channels, int groups_);
  Tensor<S> forward(const Tensor<S>& x) const;
};

template <class S>
struct DualFpnOutput {
  // radar-concatenated detection maps at strides 8/16/32
  Tensor<S> d3, d4, d5;
  // stride-4 segmentation streams (A: targets+drivable, B: waterline)
  Tensor<S> stream_a, stream_b;
};

// Weight-shared part of the pyramid: pre-concat P maps plus the
// radar-concatenated detection maps.
template <class S>
struct SharedMaps {
  Tensor<S> p3, p4, p5;
  Tensor<S> d3, d4, d5;
};

// Top-down pyramid: shared P5/P4/P3 path, duplicated stride-4 streams each
// behind its own shuffle attention. Radar maps concat onto P3..P5 for the
// detection head; backbone+fpn fusion additionally concats them onto C3..C5
// before the lateral convs.
template <class S>
struct DualFpn {
  ConvGnAct<S> lat2a, lat2b, lat3, lat4, lat5;
  FusionBlock<S> block5, merge4, merge3, block_a, block_b;
  ShuffleAttention<S> sa_a, sa_b;
  FusionMode fusion = FusionMode::kFpn;

  DualFpn() = default;
  DualFpn(ParamStore<S>& ps, const std::string& prefix, const ModelConfig& cfg, Rng& rng);
  // Top-down path shared by every task head.
  SharedMaps<S> forward_shared(const FeaturePyramid<S>& pyr,
                               const std::array<Tensor<S>, 3>& radar) const;
  // P3 only, for the segmentation-only trims. `radar` may be empty tensors
  // when fusion is fpn-level (the segmentation path never touches radar).
  Tensor<S> forward_p3(const FeaturePyramid<S>& pyr,
                       const std::array<Tensor<S>, 3>& radar) const;
  // Independent stride-4 streams (A: targets+drivable, B: waterline).
  Tensor<S> forward_stream_a(const Tensor<S>& c2, const Tensor<S>& p3) const;
  Tensor<S> forward_stream_b(const Tensor<S>& c2, const Tensor<S>& p3) const;
  DualFpnOutput<S> forward(const FeaturePyramid<S>& pyr,
                           const std::array<Tensor<S>, 3>& radar) const;
};

}  // namespace ach
