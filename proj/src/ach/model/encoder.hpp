// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ach/model/config.hpp"
#include "ach/nn/layers.hpp"

namespace ach {

// Image features at strides 4, 8, 16, 32 relative to the input.
template <class S>
struct FeaturePyramid {
  Tensor<S> c2, c3, c4, c5;
};

// Depthwise block: dw 3x3 -> pw 1x1, both GN+SiLU, residual.
template <class S>
struct DwBlock {
  ConvGnAct<S> dw, pw;
  DwBlock() = default;
  DwBlock(ParamStore<S>& ps, const std::string& prefix, int c, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Pre-norm residual self-attention over the flattened spatial grid.
template <class S>
struct MhsaBlock {
  GroupNormLayer<S> norm;
  Tensor<S> wq, wk, wv, wo;
  int heads = 4;
  MhsaBlock() = default;
  MhsaBlock(ParamStore<S>& ps, const std::string& prefix, int c, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// 1x1 halve -> max pools k=5,9,13 -> concat all four branches -> 1x1 restore.
template <class S>
struct Spp {
  ConvGnAct<S> reduce, fuse;
  Spp() = default;
  Spp(ParamStore<S>& ps, const std::string& prefix, int c, Rng& rng);
  Tensor<S> forward(const Tensor<S>& x) const;
};

// Five-stage encoder: stem at stride 2, then four stages of depths [2,2,6,4]
// at strides 4/8/16/32. Stages 4 and 5 end in one attention block each; SPP
// caps the last stage.
template <class S>
struct ImageEncoder {
  struct Stage {
    ConvGnAct<S> down;
    std::vector<DwBlock<S>> dw_blocks;
    MhsaBlock<S> attn;
    bool has_attn = false;
  };

  ConvGnAct<S> stem;
  std::array<Stage, 4> stages;
  Spp<S> spp;

  ImageEncoder() = default;
  ImageEncoder(ParamStore<S>& ps, const std::string& prefix, const ModelConfig& cfg, Rng& rng);
  FeaturePyramid<S> forward(const Tensor<S>& image) const;
};

}  // namespace ach
