// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ach/data/synth.hpp"
#include "ach/eval/metrics.hpp"
#include "ach/model/achelous.hpp"

namespace ach {

struct EvalOptions {
  int batch = 8;
  float score_thresh = 0.01f;  // low floor so the PR sweep sees the full curve
  float nms_iou = 0.65f;
};

struct EvalResult {
  DetMetrics det;
  MiouResult seg_a;        // all nine first-stream classes
  double miou_targets = 0;   // mean over target classes 0..6
  double miou_drivable = 0;  // drivable-water class
  double miou_waterline = 0; // positive (waterline) class of the binary stream
  MiouResult pc;
  double pc_accuracy = 0;
};

// Full-split evaluation: forward every sample (tape off), decode + NMS the
// detections, argmax the segmentation/point logits, and score against GT.
EvalResult evaluate_model(const Achelous<float>& model, const std::vector<Sample>& samples,
                          const EvalOptions& opt = {});

// Detections only (used by the ablation/robustness comparisons).
std::vector<std::vector<DetBox>> predict_boxes(const Achelous<float>& model,
                                               const std::vector<Sample>& samples,
                                               const EvalOptions& opt = {});

// Copies checkpoint entries into the model's parameters by name. Entries the
// model does not own (e.g. the loss log-variances) are ignored; a model
// parameter missing from the file or stored with the wrong size throws.
void load_model_weights(Achelous<float>& model, const std::string& path);

}  // namespace ach
