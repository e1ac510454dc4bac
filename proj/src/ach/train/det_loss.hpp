// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "ach/model/detect.hpp"
#include "ach/model/heads.hpp"

namespace ach {

// Assignment snapshot for one batch. Built from detached predictions so the
// discrete matching stays fixed while gradients flow through the loss; this
// also lets finite-difference checks perturb the weights without flipping an
// assignment mid-check.
struct DetTargets {
  int images = 0;
  int64_t anchors = 0;                         // per image
  std::vector<float> cls_target;               // [images*anchors*classes]
  std::vector<float> obj_target;               // [images*anchors]
  std::vector<int64_t> pos_rows;               // rows into the flat [N*A] layout
  std::vector<std::array<float, 4>> pos_gt;    // matched GT box per positive row
  std::vector<SimOtaResult> assignments;       // per image, for inspection
  int64_t n_pos() const { return static_cast<int64_t>(pos_rows.size()); }
};

// Runs SimOTA per image on the decoded (detached) predictions.
// Throws std::logic_error if any anchor ends up owned by two GTs.
DetTargets build_det_targets(const DetPrediction<float>& pred, const AnchorGrid& grid,
                             const std::vector<std::vector<GtBox>>& gts);

template <class S>
struct DetLossParts {
  Tensor<S> cls, obj, box;
  Tensor<S> combined() const { return add(add(cls, obj), box); }
};

// Focal classification + focal objectness + (1 - IoU) box regression against
// a frozen target set. Classification/objectness sums are normalized by the
// positive count; the box term is a mean over positive anchors.
template <class S>
DetLossParts<S> det_loss(const DetPrediction<S>& pred, const AnchorGrid& grid,
                         const DetTargets& targets, S alpha = S(0.25), S gamma = S(2));

// [N,C,H,W] level maps -> one [N*A, C] tensor in anchor-grid order
// (level-major, then row-major within a level).
template <class S>
Tensor<S> flatten_det_maps(const std::array<Tensor<S>, 3>& levels);

}  // namespace ach
