// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/model/encoder.hpp"

#include <cmath>

#include "ach/core/pool.hpp"

namespace ach {

template <class S>
DwBlock<S>::DwBlock(ParamStore<S>& ps, const std::string& prefix, int c, Rng& rng)
    : dw(ps, prefix + ".dw", c, c, 3, 1, 1, c, rng),
      pw(ps, prefix + ".pw", c, c, 1, 1, 0, 1, rng) {}

template <class S>
Tensor<S> DwBlock<S>::forward(const Tensor<S>& x) const {
  return add(pw.forward(dw.forward(x)), x);
}

template <class S>
MhsaBlock<S>::MhsaBlock(ParamStore<S>& ps, const std::string& prefix, int c, Rng& rng)
    : norm(ps, prefix + ".norm", c, 4) {
  S bound = static_cast<S>(1.0 / std::sqrt(static_cast<double>(c)));
  wq = ps.add(prefix + ".wq", Tensor<S>::uniform({c, c}, -bound, bound, rng));
  wk = ps.add(prefix + ".wk", Tensor<S>::uniform({c, c}, -bound, bound, rng));
  wv = ps.add(prefix + ".wv", Tensor<S>::uniform({c, c}, -bound, bound, rng));
  wo = ps.add(prefix + ".wo", Tensor<S>::uniform({c, c}, -bound, bound, rng));
}

template <class S>
Tensor<S> MhsaBlock<S>::forward(const Tensor<S>& x) const {
  const Shape& s = x.shape();
  Tensor<S> tokens =
      permute(reshape(norm.forward(x), {s[0], s[1], s[2] * s[3]}), {0, 2, 1});  // [N,T,C]
  Tensor<S> att = mhsa(tokens, heads, wq, wk, wv, wo);
  Tensor<S> back = reshape(permute(att, {0, 2, 1}), s);
  return add(back, x);
}

template <class S>
Spp<S>::Spp(ParamStore<S>& ps, const std::string& prefix, int c, Rng& rng)
    : reduce(ps, prefix + ".reduce", c, c / 2, 1, 1, 0, 1, rng),
      fuse(ps, prefix + ".fuse", 2 * c, c, 1, 1, 0, 1, rng) {}

template <class S>
Tensor<S> Spp<S>::forward(const Tensor<S>& x) const {
  Tensor<S> r = reduce.forward(x);
  Tensor<S> p5 = pool2d(r, PoolKind::kMax, 5, 1, 2);
  Tensor<S> p9 = pool2d(r, PoolKind::kMax, 9, 1, 4);
  Tensor<S> p13 = pool2d(r, PoolKind::kMax, 13, 1, 6);
  return fuse.forward(concat<S>({r, p5, p9, p13}, 1));
}

template <class S>
ImageEncoder<S>::ImageEncoder(ParamStore<S>& ps, const std::string& prefix,
                              const ModelConfig& cfg, Rng& rng)
    : stem(ps, prefix + ".stem", 3, cfg.stem_channels, 3, 2, 1, 1, rng) {
  int cin = cfg.stem_channels;
  for (int s = 0; s < 4; ++s) {
    int c = cfg.stage_channels[s];
    std::string sp = prefix + ".stage" + std::to_string(s + 2);
    stages[s].down = ConvGnAct<S>(ps, sp + ".down", cin, c, 3, 2, 1, 1, rng);
    int depth = cfg.stage_depths[s];
    stages[s].has_attn = s >= 2;  // stages 4 and 5 end in one attention block
    int dw_count = stages[s].has_attn ? depth - 1 : depth;
    for (int b = 0; b < dw_count; ++b)
      stages[s].dw_blocks.emplace_back(ps, sp + ".block" + std::to_string(b), c, rng);
    if (stages[s].has_attn)
      stages[s].attn = MhsaBlock<S>(ps, sp + ".block" + std::to_string(depth - 1), c, rng);
    cin = c;
  }
  spp = Spp<S>(ps, prefix + ".spp", cfg.stage_channels[3], rng);
}

template <class S>
FeaturePyramid<S> ImageEncoder<S>::forward(const Tensor<S>& image) const {
  const Shape& s = image.shape();
  if (s.size() != 4 || s[2] % 32 != 0 || s[3] % 32 != 0)
    throw std::invalid_argument("encoder: input dims must be divisible by 32, got " +
                                shape_str(s));
  Tensor<S> x = stem.forward(image);
  FeaturePyramid<S> pyr;
  for (int st = 0; st < 4; ++st) {
    x = stages[st].down.forward(x);
    for (const auto& b : stages[st].dw_blocks) x = b.forward(x);
    if (stages[st].has_attn) x = stages[st].attn.forward(x);
    if (st == 0) pyr.c2 = x;
    if (st == 1) pyr.c3 = x;
    if (st == 2) pyr.c4 = x;
    if (st == 3) pyr.c5 = spp.forward(x);
  }
  return pyr;
}

#define ACH_INSTANTIATE(S)       \
  template struct DwBlock<S>;    \
  template struct MhsaBlock<S>;  \
  template struct Spp<S>;        \
  template struct ImageEncoder<S>;

ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
