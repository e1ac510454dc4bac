// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/eval/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace ach {

namespace {

constexpr int kMaxDetsPerImage = 100;

struct Pred {
  int image;
  float score;
  std::array<float, 4> box;
};

// 101-point interpolated AP from a cumulated PR sweep.
double interpolated_ap(const std::vector<uint8_t>& is_tp, int n_gt) {
  if (n_gt == 0) return 0.0;
  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (uint8_t hit : is_tp) {
    hit ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / n_gt);
  }
  // Make precision monotone non-increasing from the right.
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0;
  size_t at = 0;
  for (int r = 0; r <= 100; ++r) {
    double want = r / 100.0;
    while (at < recall.size() && recall[at] < want - 1e-12) ++at;
    if (at < recall.size()) ap += precision[at];
  }
  return ap / 101.0;
}

}  // namespace

DetMetrics compute_map(const std::vector<std::vector<DetBox>>& preds,
                       const std::vector<std::vector<GtBox>>& gts, int classes) {
  if (preds.size() != gts.size())
    throw std::invalid_argument("compute_map: prediction/GT image count mismatch");
  const int images = static_cast<int>(preds.size());

  // Keep the 100 highest-scoring detections per image (AR@100 convention).
  std::vector<std::vector<DetBox>> kept(images);
  for (int i = 0; i < images; ++i) {
    kept[i] = preds[i];
    std::stable_sort(kept[i].begin(), kept[i].end(),
                     [](const DetBox& a, const DetBox& b) { return a.score > b.score; });
    if (static_cast<int>(kept[i].size()) > kMaxDetsPerImage) kept[i].resize(kMaxDetsPerImage);
  }

  DetMetrics out;
  out.per_class_ap.assign(classes, -1.0);
  std::vector<double> ap50(classes, -1.0);
  double ar_sum = 0;
  int classes_with_gt = 0;

  for (int c = 0; c < classes; ++c) {
    std::vector<Pred> flat;
    std::vector<std::vector<std::array<float, 4>>> gt_boxes(images);
    int n_gt = 0;
    for (int i = 0; i < images; ++i) {
      for (const DetBox& d : kept[i])
        if (d.cls == c) flat.push_back({i, d.score, {d.x1, d.y1, d.x2, d.y2}});
      for (const GtBox& g : gts[i])
        if (g.cls == c) {
          gt_boxes[i].push_back({g.x1, g.y1, g.x2, g.y2});
          ++n_gt;
        }
    }
    if (n_gt == 0) continue;
    ++classes_with_gt;
    std::stable_sort(flat.begin(), flat.end(),
                     [](const Pred& a, const Pred& b) { return a.score > b.score; });

    double ap_sum = 0, recall_sum = 0;
    for (int t = 0; t < 10; ++t) {
      float thresh = 0.5f + 0.05f * t;
      std::vector<std::vector<uint8_t>> used(images);
      for (int i = 0; i < images; ++i) used[i].assign(gt_boxes[i].size(), 0);
      std::vector<uint8_t> is_tp;
      int tp = 0;
      for (const Pred& p : flat) {
        int best = -1;
        float best_iou = thresh;
        for (size_t g = 0; g < gt_boxes[p.image].size(); ++g) {
          if (used[p.image][g]) continue;
          float iou = box_iou(p.box, gt_boxes[p.image][g]);
          if (iou >= best_iou) {
            best_iou = iou;
            best = static_cast<int>(g);
          }
        }
        if (best >= 0) {
          used[p.image][best] = 1;
          is_tp.push_back(1);
          ++tp;
        } else {
          is_tp.push_back(0);
        }
      }
      double ap = interpolated_ap(is_tp, n_gt);
      ap_sum += ap;
      recall_sum += static_cast<double>(tp) / n_gt;
      if (t == 0) ap50[c] = ap;
    }
    out.per_class_ap[c] = ap_sum / 10.0;
    ar_sum += recall_sum / 10.0;
  }

  if (classes_with_gt > 0) {
    for (int c = 0; c < classes; ++c) {
      if (out.per_class_ap[c] >= 0) out.map_50_95 += out.per_class_ap[c];
      if (ap50[c] >= 0) out.map_50 += ap50[c];
    }
    out.map_50_95 /= classes_with_gt;
    out.map_50 /= classes_with_gt;
    out.ar_50_95 = ar_sum / classes_with_gt;
  }
  return out;
}

void SegConfusion::add(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt) {
  if (pred.size() != gt.size()) throw std::invalid_argument("compute_miou: shape mismatch");
  int classes = static_cast<int>(tp_.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    int p = pred[i], g = gt[i];
    if (p >= classes || g >= classes)
      throw std::invalid_argument("compute_miou: label out of range");
    if (p == g) {
      ++tp_[p];
    } else {
      ++fp_[p];
      ++fn_[g];
    }
  }
}

MiouResult SegConfusion::result() const {
  MiouResult out;
  out.per_class.assign(tp_.size(), -1.0);
  int present = 0;
  for (size_t c = 0; c < tp_.size(); ++c) {
    int64_t denom = tp_[c] + fp_[c] + fn_[c];
    if (denom == 0) continue;  // class absent from both masks
    out.per_class[c] = static_cast<double>(tp_[c]) / static_cast<double>(denom);
    out.mean += out.per_class[c];
    ++present;
  }
  if (present > 0) out.mean /= present;
  return out;
}

double SegConfusion::accuracy() const {
  int64_t correct = 0, total = 0;
  for (size_t c = 0; c < tp_.size(); ++c) {
    correct += tp_[c];
    total += tp_[c] + fp_[c];
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

MiouResult compute_miou(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt,
                        int classes) {
  SegConfusion conf(classes);
  conf.add(pred, gt);
  return conf.result();
}

}  // namespace ach
