// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/model/achelous.hpp"

#include "ach/core/ops.hpp"

namespace ach {

template <class S>
Achelous<S>::Achelous(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  Rng rng(seed);
  encoder_ = ImageEncoder<S>(params_, "encoder", cfg, rng);
  rcnet_ = RcNet<S>(params_, "rcnet", cfg, rng);
  neck_ = DualFpn<S>(params_, "neck", cfg, rng);
  auto rc = cfg.rcnet_channels();
  int w = cfg.fpn_width;
  det_head_ = DetHead<S>(params_, "det_head", {w + rc[0], w + rc[1], w + rc[2]},
                         cfg.head_width(), rng);
  seg_a_ = SegHead<S>(params_, "seg_a", w, cfg.seg_head_width(), kSegClassesA, rng);
  seg_b_ = SegHead<S>(params_, "seg_b", w, cfg.seg_head_width(), kSegClassesB, rng);
  pointnet_ = PointNetSeg<S>(params_, "pointnet", rng);
}

template <class S>
std::array<Tensor<S>, 3> Achelous<S>::radar_maps(const Tensor<S>& rvp) const {
  // Camera-only ablation: the radar branch still runs, but sees a blank map.
  Tensor<S> in = cfg_.radar_enabled ? rvp : Tensor<S>::zeros(rvp.shape());
  return rcnet_.forward(in);
}

template <class S>
ModelOutputs<S> Achelous<S>::forward(const Tensor<S>& image, const Tensor<S>& rvp,
                                     const Tensor<S>& points, const Tensor<S>& mask) const {
  FeaturePyramid<S> pyr = encoder_.forward(image);
  SharedMaps<S> maps = neck_.forward_shared(pyr, radar_maps(rvp));
  ModelOutputs<S> out;
  out.det = det_head_.forward({maps.d3, maps.d4, maps.d5});
  out.seg_a = seg_a_.forward(neck_.forward_stream_a(pyr.c2, maps.p3));
  out.seg_b = seg_b_.forward(neck_.forward_stream_b(pyr.c2, maps.p3));
  out.pc_logits = pointnet_.forward(points, mask);
  return out;
}

template <class S>
DetPrediction<S> Achelous<S>::forward_det_only(const Tensor<S>& image,
                                               const Tensor<S>& rvp) const {
  FeaturePyramid<S> pyr = encoder_.forward(image);
  SharedMaps<S> maps = neck_.forward_shared(pyr, radar_maps(rvp));
  return det_head_.forward({maps.d3, maps.d4, maps.d5});
}

template <class S>
Tensor<S> Achelous<S>::forward_seg_a_only(const Tensor<S>& image, const Tensor<S>& rvp) const {
  FeaturePyramid<S> pyr = encoder_.forward(image);
  // The segmentation path only consumes radar when it is fused into the
  // backbone; a standalone segmenter skips the radar branch otherwise.
  std::array<Tensor<S>, 3> radar;
  if (cfg_.fusion == FusionMode::kBackboneFpn) radar = radar_maps(rvp);
  return seg_a_.forward(neck_.forward_stream_a(pyr.c2, neck_.forward_p3(pyr, radar)));
}

template <class S>
Tensor<S> Achelous<S>::forward_seg_b_only(const Tensor<S>& image, const Tensor<S>& rvp) const {
  FeaturePyramid<S> pyr = encoder_.forward(image);
  std::array<Tensor<S>, 3> radar;
  if (cfg_.fusion == FusionMode::kBackboneFpn) radar = radar_maps(rvp);
  return seg_b_.forward(neck_.forward_stream_b(pyr.c2, neck_.forward_p3(pyr, radar)));
}

template <class S>
Tensor<S> Achelous<S>::forward_points_only(const Tensor<S>& points,
                                           const Tensor<S>& mask) const {
  return pointnet_.forward(points, mask);
}

template class Achelous<float>;
template class Achelous<double>;

}  // namespace ach
