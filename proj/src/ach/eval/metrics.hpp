// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "ach/model/detect.hpp"

namespace ach {

struct DetMetrics {
  double map_50_95 = 0;             // AP averaged over classes and IoU 0.50:0.05:0.95
  double map_50 = 0;                // AP at IoU 0.50
  double ar_50_95 = 0;              // mean max recall over thresholds (<=100 dets/image)
  std::vector<double> per_class_ap;  // 0.50:0.95 average; -1 for classes without GT
};

// COCO-style evaluation: per class and IoU threshold, predictions are matched
// greedily in descending score order to the unmatched GT with the highest
// IoU >= threshold; AP uses 101-point interpolation. Classes without any GT
// are skipped in the averages.
DetMetrics compute_map(const std::vector<std::vector<DetBox>>& preds,
                       const std::vector<std::vector<GtBox>>& gts,
                       int classes = kNumTargetClasses);

struct MiouResult {
  std::vector<double> per_class;  // IoU, or -1 when the class is absent everywhere
  double mean = 0;                // over classes present in prediction or GT
};

// Streaming confusion counts so large splits can be scored image by image.
class SegConfusion {
 public:
  explicit SegConfusion(int classes) : tp_(classes, 0), fp_(classes, 0), fn_(classes, 0) {}
  void add(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt);
  MiouResult result() const;
  double accuracy() const;

 private:
  std::vector<int64_t> tp_, fp_, fn_;
};

// IoU_c = TP / (TP + FP + FN) on flat label maps of equal length.
MiouResult compute_miou(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& gt,
                        int classes);

}  // namespace ach
