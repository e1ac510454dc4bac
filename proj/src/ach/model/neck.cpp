// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/model/neck.hpp"

#include "ach/core/pool.hpp"

namespace ach {

template <class S>
GhostModule<S>::GhostModule(ParamStore<S>& ps, const std::string& prefix, int cin, int cout,
                            Rng& rng) {
  if (cout % 2 != 0) throw std::invalid_argument("ghost module: output channels must be even");
  primary = ConvGnAct<S>(ps, prefix + ".primary", cin, cout / 2, 1, 1, 0, 1, rng);
  cheap = Conv2dLayer<S>(ps, prefix + ".cheap", cout / 2, cout / 2, 3, 1, 1, cout / 2,
                         /*bias=*/false, rng);
}

template <class S>
Tensor<S> GhostModule<S>::forward(const Tensor<S>& x) const {
  Tensor<S> p = primary.forward(x);
  return concat<S>({p, cheap.forward(p)}, 1);
}

template <class S>
CspBlock<S>::CspBlock(ParamStore<S>& ps, const std::string& prefix, int cin, int cout, int n,
                      Rng& rng) {
  int half = cout / 2;
  split_skip = ConvGnAct<S>(ps, prefix + ".split_skip", cin, half, 1, 1, 0, 1, rng);
  split_main = ConvGnAct<S>(ps, prefix + ".split_main", cin, half, 1, 1, 0, 1, rng);
  for (int i = 0; i < n; ++i) {
    std::string bp = prefix + ".bottleneck" + std::to_string(i);
    bottlenecks.push_back({ConvGnAct<S>(ps, bp + ".a", half, half, 1, 1, 0, 1, rng),
                           ConvGnAct<S>(ps, bp + ".b", half, half, 3, 1, 1, 1, rng)});
  }
  fuse = ConvGnAct<S>(ps, prefix + ".fuse", cout, cout, 1, 1, 0, 1, rng);
}

template <class S>
Tensor<S> CspBlock<S>::forward(const Tensor<S>& x) const {
  Tensor<S> skip = split_skip.forward(x);
  Tensor<S> main = split_main.forward(x);
  for (const auto& bn : bottlenecks) main = add(bn.b.forward(bn.a.forward(main)), main);
  return fuse.forward(concat<S>({skip, main}, 1));
}

template <class S>
FusionBlock<S>::FusionBlock(ParamStore<S>& ps, const std::string& prefix, int cin, int cout,
                            NeckVariant variant_, Rng& rng)
    : variant(variant_) {
  if (variant == NeckVariant::kGhost)
    ghost = GhostModule<S>(ps, prefix, cin, cout, rng);
  else
    csp = CspBlock<S>(ps, prefix, cin, cout, /*n=*/1, rng);
}

template <class S>
Tensor<S> FusionBlock<S>::forward(const Tensor<S>& x) const {
  return variant == NeckVariant::kGhost ? ghost.forward(x) : csp.forward(x);
}

template <class S>
ShuffleAttention<S>::ShuffleAttention(ParamStore<S>& ps, const std::string& prefix, int channels,
                                      int groups_)
    : groups(groups_) {
  if (channels % (2 * groups_) != 0)
    throw std::invalid_argument("shuffle attention: channels not divisible by 2*groups");
  int half = channels / (2 * groups_);
  cweight = ps.add(prefix + ".cweight", Tensor<S>::ones({1, half, 1, 1}));
  cbias = ps.add(prefix + ".cbias", Tensor<S>::zeros({1, half, 1, 1}));
  sweight = ps.add(prefix + ".sweight", Tensor<S>::ones({1, half, 1, 1}));
  sbias = ps.add(prefix + ".sbias", Tensor<S>::zeros({1, half, 1, 1}));
  norm = GroupNormLayer<S>(ps, prefix + ".norm", half, half);  // per-channel norm
}

template <class S>
Tensor<S> ShuffleAttention<S>::forward(const Tensor<S>& x) const {
  const Shape& s = x.shape();
  int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  int64_t half = C / (2 * groups);
  Tensor<S> grouped = reshape(x, {N * groups, C / groups, H, W});
  Tensor<S> x0 = slice(grouped, 1, 0, half);
  Tensor<S> x1 = slice(grouped, 1, half, half);
  // channel gate from global average pooling
  Tensor<S> gap = mean_dims(x0, {2, 3}, true);
  Tensor<S> g0 = sigmoid(add(mul(gap, cweight), cbias));
  // spatial gate from per-channel normalization
  Tensor<S> g1 = sigmoid(add(mul(norm.forward(x1), sweight), sbias));
  Tensor<S> merged = concat<S>({mul(x0, g0), mul(x1, g1)}, 1);
  return channel_shuffle(reshape(merged, {N, C, H, W}), groups);
}

template <class S>
DualFpn<S>::DualFpn(ParamStore<S>& ps, const std::string& prefix, const ModelConfig& cfg,
                    Rng& rng)
    : fusion(cfg.fusion) {
  int w = cfg.fpn_width;
  auto rc = cfg.rcnet_channels();
  bool bf = fusion == FusionMode::kBackboneFpn;
  int c2 = cfg.stage_channels[0];
  int c3 = cfg.stage_channels[1] + (bf ? rc[0] : 0);
  int c4 = cfg.stage_channels[2] + (bf ? rc[1] : 0);
  int c5 = cfg.stage_channels[3] + (bf ? rc[2] : 0);
  lat2a = ConvGnAct<S>(ps, prefix + ".lat2a", c2, w, 1, 1, 0, 1, rng);
  lat2b = ConvGnAct<S>(ps, prefix + ".lat2b", c2, w, 1, 1, 0, 1, rng);
  lat3 = ConvGnAct<S>(ps, prefix + ".lat3", c3, w, 1, 1, 0, 1, rng);
  lat4 = ConvGnAct<S>(ps, prefix + ".lat4", c4, w, 1, 1, 0, 1, rng);
  lat5 = ConvGnAct<S>(ps, prefix + ".lat5", c5, w, 1, 1, 0, 1, rng);
  block5 = FusionBlock<S>(ps, prefix + ".block5", w, w, cfg.neck, rng);
  merge4 = FusionBlock<S>(ps, prefix + ".merge4", 2 * w, w, cfg.neck, rng);
  merge3 = FusionBlock<S>(ps, prefix + ".merge3", 2 * w, w, cfg.neck, rng);
  sa_a = ShuffleAttention<S>(ps, prefix + ".sa_a", 2 * w, 4);
  sa_b = ShuffleAttention<S>(ps, prefix + ".sa_b", 2 * w, 4);
  block_a = FusionBlock<S>(ps, prefix + ".block_a", 2 * w, w, cfg.neck, rng);
  block_b = FusionBlock<S>(ps, prefix + ".block_b", 2 * w, w, cfg.neck, rng);
}

template <class S>
SharedMaps<S> DualFpn<S>::forward_shared(const FeaturePyramid<S>& pyr,
                                         const std::array<Tensor<S>, 3>& radar) const {
  Tensor<S> c3 = pyr.c3, c4 = pyr.c4, c5 = pyr.c5;
  if (fusion == FusionMode::kBackboneFpn) {
    c3 = concat<S>({c3, radar[0]}, 1);
    c4 = concat<S>({c4, radar[1]}, 1);
    c5 = concat<S>({c5, radar[2]}, 1);
  }
  SharedMaps<S> m;
  m.p5 = block5.forward(lat5.forward(c5));
  m.p4 = merge4.forward(concat<S>({lat4.forward(c4), upsample2x(m.p5)}, 1));
  m.p3 = merge3.forward(concat<S>({lat3.forward(c3), upsample2x(m.p4)}, 1));
  m.d3 = concat<S>({m.p3, radar[0]}, 1);
  m.d4 = concat<S>({m.p4, radar[1]}, 1);
  m.d5 = concat<S>({m.p5, radar[2]}, 1);
  return m;
}

template <class S>
Tensor<S> DualFpn<S>::forward_p3(const FeaturePyramid<S>& pyr,
                                 const std::array<Tensor<S>, 3>& radar) const {
  Tensor<S> c3 = pyr.c3, c4 = pyr.c4, c5 = pyr.c5;
  if (fusion == FusionMode::kBackboneFpn) {
    c3 = concat<S>({c3, radar[0]}, 1);
    c4 = concat<S>({c4, radar[1]}, 1);
    c5 = concat<S>({c5, radar[2]}, 1);
  }
  Tensor<S> p5 = block5.forward(lat5.forward(c5));
  Tensor<S> p4 = merge4.forward(concat<S>({lat4.forward(c4), upsample2x(p5)}, 1));
  return merge3.forward(concat<S>({lat3.forward(c3), upsample2x(p4)}, 1));
}

template <class S>
Tensor<S> DualFpn<S>::forward_stream_a(const Tensor<S>& c2, const Tensor<S>& p3) const {
  return block_a.forward(sa_a.forward(concat<S>({lat2a.forward(c2), upsample2x(p3)}, 1)));
}

template <class S>
Tensor<S> DualFpn<S>::forward_stream_b(const Tensor<S>& c2, const Tensor<S>& p3) const {
  return block_b.forward(sa_b.forward(concat<S>({lat2b.forward(c2), upsample2x(p3)}, 1)));
}

template <class S>
DualFpnOutput<S> DualFpn<S>::forward(const FeaturePyramid<S>& pyr,
                                     const std::array<Tensor<S>, 3>& radar) const {
  SharedMaps<S> m = forward_shared(pyr, radar);
  DualFpnOutput<S> out;
  out.d3 = m.d3;
  out.d4 = m.d4;
  out.d5 = m.d5;
  out.stream_a = forward_stream_a(pyr.c2, m.p3);
  out.stream_b = forward_stream_b(pyr.c2, m.p3);
  return out;
}

#define ACH_INSTANTIATE(S)             \
  template struct GhostModule<S>;      \
  template struct CspBlock<S>;         \
  template struct FusionBlock<S>;      \
  template struct ShuffleAttention<S>; \
  template struct DualFpn<S>;

ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
