// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "ach/data/types.hpp"
#include "ach/model/heads.hpp"

namespace ach {

// One decoded detection in pixel coordinates.
struct DetBox {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  int cls = 0;
  float score = 0;
};

// Flattened view of every anchor point across the three detection levels,
// level-major then row-major within a level.
struct AnchorGrid {
  std::vector<int> stride;  // 8/16/32
  std::vector<int> gx, gy;  // grid column / row
  std::vector<int> level;   // 0..2
  int64_t count() const { return static_cast<int64_t>(stride.size()); }
};

AnchorGrid make_anchor_grid(int image_size);

float box_iou(const std::array<float, 4>& a, const std::array<float, 4>& b);

// center = (grid + dxdy) * stride, size = exp(dwdh) * stride, as xyxy.
std::array<float, 4> decode_anchor(int gx, int gy, int stride,
                                   const std::array<float, 4>& reg);
// Inverse of decode_anchor for a box at a given anchor cell.
std::array<float, 4> encode_box(const std::array<float, 4>& xyxy, int gx, int gy, int stride);

// Decode every anchor of every image: class = argmax over class logits,
// score = sigmoid(obj) * sigmoid(cls), boxes clipped to the image.
std::vector<std::vector<DetBox>> decode_boxes(const DetPrediction<float>& pred, int image_size,
                                              float score_thresh);

// Class-wise greedy suppression by descending score.
std::vector<DetBox> nms(std::vector<DetBox> boxes, float iou_thresh);

// Raw material SimOTA works on: one decoded box and the class logits per
// candidate anchor, plus where that anchor sits.
struct SimOtaInput {
  std::vector<std::array<float, 4>> boxes;        // decoded xyxy per candidate
  std::vector<std::vector<float>> cls_logits;     // [candidates][classes]
  std::vector<std::array<float, 2>> points;       // anchor point (x, y) in pixels
  std::vector<float> strides;                     // anchor stride in pixels
};

struct SimOtaResult {
  std::vector<int> anchor_gt;                 // per candidate: GT index or -1
  std::vector<std::vector<int>> gt_anchors;   // per GT: sorted candidate indices
};

// Candidate filter: anchor point inside the GT box, or within 2.5 strides of
// its center. Cost = BCE(class logits, one-hot) + 3 * (-ln IoU). Per GT,
// dynamic k = clamp(round(sum of its top-10 candidate IoUs), 1, #candidates)
// lowest-cost candidates are taken; an anchor claimed by several GTs goes to
// the one where it is cheapest (ties to the lower GT index). A GT stripped
// bare by conflicts reclaims its cheapest still-unassigned candidate.
SimOtaResult simota_assign(const SimOtaInput& in, const std::vector<GtBox>& gts);

}  // namespace ach
