// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/model/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ach {
namespace {

constexpr double kCenterRadius = 2.5;
constexpr double kIouCostWeight = 3.0;

// Numerically stable binary cross-entropy from a raw logit.
double bce_logit(double z, double target) {
  return std::max(z, 0.0) - z * target + std::log1p(std::exp(-std::abs(z)));
}

double cost_of(const SimOtaInput& in, const GtBox& gt, int cand) {
  double bce = 0;
  const auto& logits = in.cls_logits[cand];
  for (size_t c = 0; c < logits.size(); ++c)
    bce += bce_logit(logits[c], static_cast<int>(c) == gt.cls ? 1.0 : 0.0);
  double iou = box_iou(in.boxes[cand], {gt.x1, gt.y1, gt.x2, gt.y2});
  double lniou = -std::log(std::max(iou, 1e-8));
  return bce + kIouCostWeight * lniou;
}

bool eligible(const SimOtaInput& in, const GtBox& gt, int cand) {
  float px = in.points[cand][0], py = in.points[cand][1];
  bool inside = px >= gt.x1 && px <= gt.x2 && py >= gt.y1 && py <= gt.y2;
  float cx = 0.5f * (gt.x1 + gt.x2), cy = 0.5f * (gt.y1 + gt.y2);
  float r = static_cast<float>(kCenterRadius) * in.strides[cand];
  bool centered = std::abs(px - cx) <= r && std::abs(py - cy) <= r;
  return inside || centered;
}

}  // namespace

AnchorGrid make_anchor_grid(int image_size) {
  if (image_size % 32 != 0) throw std::invalid_argument("image size must be divisible by 32");
  AnchorGrid g;
  for (int l = 0; l < 3; ++l) {
    int s = kDetStrides[l];
    int dim = image_size / s;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        g.stride.push_back(s);
        g.gx.push_back(j);
        g.gy.push_back(i);
        g.level.push_back(l);
      }
  }
  return g;
}

float box_iou(const std::array<float, 4>& a, const std::array<float, 4>& b) {
  float ix = std::max(0.0f, std::min(a[2], b[2]) - std::max(a[0], b[0]));
  float iy = std::max(0.0f, std::min(a[3], b[3]) - std::max(a[1], b[1]));
  float inter = ix * iy;
  float area_a = std::max(0.0f, a[2] - a[0]) * std::max(0.0f, a[3] - a[1]);
  float area_b = std::max(0.0f, b[2] - b[0]) * std::max(0.0f, b[3] - b[1]);
  float uni = area_a + area_b - inter;
  return uni > 0 ? inter / uni : 0.0f;
}

std::array<float, 4> decode_anchor(int gx, int gy, int stride,
                                   const std::array<float, 4>& reg) {
  float s = static_cast<float>(stride);
  float cx = (static_cast<float>(gx) + reg[0]) * s;
  float cy = (static_cast<float>(gy) + reg[1]) * s;
  float w = std::exp(reg[2]) * s;
  float h = std::exp(reg[3]) * s;
  return {cx - 0.5f * w, cy - 0.5f * h, cx + 0.5f * w, cy + 0.5f * h};
}

std::array<float, 4> encode_box(const std::array<float, 4>& xyxy, int gx, int gy, int stride) {
  float s = static_cast<float>(stride);
  float cx = 0.5f * (xyxy[0] + xyxy[2]), cy = 0.5f * (xyxy[1] + xyxy[3]);
  float w = xyxy[2] - xyxy[0], h = xyxy[3] - xyxy[1];
  return {cx / s - static_cast<float>(gx), cy / s - static_cast<float>(gy), std::log(w / s),
          std::log(h / s)};
}

std::vector<std::vector<DetBox>> decode_boxes(const DetPrediction<float>& pred, int image_size,
                                              float score_thresh) {
  auto sigmoid = [](float z) { return 1.0f / (1.0f + std::exp(-z)); };
  int64_t n_img = pred.cls[0].shape()[0];
  std::vector<std::vector<DetBox>> out(n_img);
  float lim = static_cast<float>(image_size);
  for (int64_t n = 0; n < n_img; ++n) {
    for (int l = 0; l < 3; ++l) {
      const Shape& cs = pred.cls[l].shape();
      int64_t C = cs[1], H = cs[2], W = cs[3];
      const float* cd = pred.cls[l].ptr();
      const float* rd = pred.reg[l].ptr();
      const float* od = pred.obj[l].ptr();
      int stride = kDetStrides[l];
      for (int64_t i = 0; i < H; ++i)
        for (int64_t j = 0; j < W; ++j) {
          int64_t pix = i * W + j;
          int best = 0;
          float best_logit = -std::numeric_limits<float>::infinity();
          for (int64_t c = 0; c < C; ++c) {
            float z = cd[((n * C + c) * H * W) + pix];
            if (z > best_logit) {
              best_logit = z;
              best = static_cast<int>(c);
            }
          }
          float score = sigmoid(od[n * H * W + pix]) * sigmoid(best_logit);
          if (score < score_thresh) continue;
          std::array<float, 4> reg;
          for (int c = 0; c < 4; ++c) reg[c] = rd[((n * 4 + c) * H * W) + pix];
          auto b = decode_anchor(static_cast<int>(j), static_cast<int>(i), stride, reg);
          DetBox det;
          det.x1 = std::clamp(b[0], 0.0f, lim);
          det.y1 = std::clamp(b[1], 0.0f, lim);
          det.x2 = std::clamp(b[2], 0.0f, lim);
          det.y2 = std::clamp(b[3], 0.0f, lim);
          det.cls = best;
          det.score = score;
          out[n].push_back(det);
        }
    }
  }
  return out;
}

std::vector<DetBox> nms(std::vector<DetBox> boxes, float iou_thresh) {
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const DetBox& a, const DetBox& b) { return a.score > b.score; });
  std::vector<DetBox> kept;
  std::vector<char> dead(boxes.size(), 0);
  for (size_t i = 0; i < boxes.size(); ++i) {
    if (dead[i]) continue;
    kept.push_back(boxes[i]);
    for (size_t j = i + 1; j < boxes.size(); ++j) {
      if (dead[j] || boxes[j].cls != boxes[i].cls) continue;
      float iou = box_iou({boxes[i].x1, boxes[i].y1, boxes[i].x2, boxes[i].y2},
                          {boxes[j].x1, boxes[j].y1, boxes[j].x2, boxes[j].y2});
      if (iou > iou_thresh) dead[j] = 1;
    }
  }
  return kept;
}

SimOtaResult simota_assign(const SimOtaInput& in, const std::vector<GtBox>& gts) {
  size_t n_cand = in.boxes.size();
  size_t n_gt = gts.size();
  SimOtaResult res;
  res.anchor_gt.assign(n_cand, -1);
  res.gt_anchors.resize(n_gt);
  if (n_gt == 0) return res;

  const double inf = std::numeric_limits<double>::infinity();
  // cost[g][a]: assignment cost, +inf when a is outside g's candidate region.
  std::vector<std::vector<double>> cost(n_gt, std::vector<double>(n_cand, inf));
  std::vector<std::vector<double>> iou(n_gt, std::vector<double>(n_cand, 0.0));
  for (size_t g = 0; g < n_gt; ++g)
    for (size_t a = 0; a < n_cand; ++a)
      if (eligible(in, gts[g], static_cast<int>(a))) {
        cost[g][a] = cost_of(in, gts[g], static_cast<int>(a));
        iou[g][a] = box_iou(in.boxes[a], {gts[g].x1, gts[g].y1, gts[g].x2, gts[g].y2});
      }

  // Per-GT dynamic k and its k cheapest candidates.
  std::vector<std::vector<int>> picks(n_gt);
  for (size_t g = 0; g < n_gt; ++g) {
    std::vector<int> elig;
    for (size_t a = 0; a < n_cand; ++a)
      if (cost[g][a] < inf) elig.push_back(static_cast<int>(a));
    if (elig.empty()) continue;
    std::vector<double> ious;
    for (int a : elig) ious.push_back(iou[g][a]);
    std::sort(ious.rbegin(), ious.rend());
    double top = 0;
    for (size_t i = 0; i < ious.size() && i < 10; ++i) top += ious[i];
    int k = std::clamp(static_cast<int>(std::lround(top)), 1,
                       static_cast<int>(elig.size()));
    std::stable_sort(elig.begin(), elig.end(),
                     [&](int a, int b) { return cost[g][a] < cost[g][b]; });
    picks[g].assign(elig.begin(), elig.begin() + k);
  }

  // Conflict resolution: an anchor picked by several GTs goes where it is
  // cheapest; stable_sort above plus the < here break ties toward lower index.
  std::vector<int> owner(n_cand, -1);
  for (size_t g = 0; g < n_gt; ++g)
    for (int a : picks[g]) {
      if (owner[a] == -1 || cost[g][a] < cost[owner[a]][a]) {
        if (owner[a] != -1) {
          auto& v = res.gt_anchors[owner[a]];
          v.erase(std::remove(v.begin(), v.end(), a), v.end());
        }
        owner[a] = static_cast<int>(g);
        res.gt_anchors[g].push_back(a);
      }
    }

  // A GT whose whole pick set was stolen reclaims its cheapest unowned
  // candidate, keeping every GT with candidates represented when possible.
  for (size_t g = 0; g < n_gt; ++g) {
    if (!res.gt_anchors[g].empty()) continue;
    int best = -1;
    for (size_t a = 0; a < n_cand; ++a) {
      if (owner[a] != -1 || cost[g][a] >= inf) continue;
      if (best == -1 || cost[g][a] < cost[g][best]) best = static_cast<int>(a);
    }
    if (best != -1) {
      owner[best] = static_cast<int>(g);
      res.gt_anchors[g].push_back(best);
    }
  }

  for (size_t a = 0; a < n_cand; ++a) res.anchor_gt[a] = owner[a];
  for (auto& v : res.gt_anchors) std::sort(v.begin(), v.end());
  return res;
}

}  // namespace ach
