// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ach/model/config.hpp"
#include "ach/model/encoder.hpp"
#include "ach/model/heads.hpp"
#include "ach/model/neck.hpp"
#include "ach/model/rcnet.hpp"

namespace ach {

// Everything one forward pass produces.
template <class S>
struct ModelOutputs {
  DetPrediction<S> det;
  Tensor<S> seg_a;      // [N,9,H,W] target + drivable logits at full resolution
  Tensor<S> seg_b;      // [N,2,H,W] waterline logits at full resolution
  Tensor<S> pc_logits;  // [N,P,8]
};

// The unified five-task network: shared image encoder and pyramid, radar
// branch, detection head on the radar-fused maps, two stride-4 segmentation
// streams, and the point-cloud segmentation net.
template <class S>
class Achelous {
 public:
  Achelous(const ModelConfig& cfg, uint64_t seed);

  // image [N,3,H,W], rvp [N,3,H,W], points [N,P,5], mask [N,P].
  ModelOutputs<S> forward(const Tensor<S>& image, const Tensor<S>& rvp,
                          const Tensor<S>& points, const Tensor<S>& mask) const;

  // Single-task forwards executing only the layers that task needs; these are
  // the width-matched standalone baselines for the latency comparison.
  DetPrediction<S> forward_det_only(const Tensor<S>& image, const Tensor<S>& rvp) const;
  Tensor<S> forward_seg_a_only(const Tensor<S>& image, const Tensor<S>& rvp) const;
  Tensor<S> forward_seg_b_only(const Tensor<S>& image, const Tensor<S>& rvp) const;
  Tensor<S> forward_points_only(const Tensor<S>& points, const Tensor<S>& mask) const;

  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }
  const ModelConfig& config() const { return cfg_; }
  int64_t parameter_count() const { return params_.element_count(); }

  const ImageEncoder<S>& encoder() const { return encoder_; }
  const RcNet<S>& rcnet() const { return rcnet_; }
  const DualFpn<S>& neck() const { return neck_; }
  const DetHead<S>& det_head() const { return det_head_; }

 private:
  std::array<Tensor<S>, 3> radar_maps(const Tensor<S>& rvp) const;

  ModelConfig cfg_;
  ParamStore<S> params_;
  ImageEncoder<S> encoder_;
  RcNet<S> rcnet_;
  DualFpn<S> neck_;
  DetHead<S> det_head_;
  SegHead<S> seg_a_, seg_b_;
  PointNetSeg<S> pointnet_;
};

}  // namespace ach
