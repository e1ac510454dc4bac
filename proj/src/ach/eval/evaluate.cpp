// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/eval/evaluate.hpp"

#include <algorithm>
#include <stdexcept>

#include "ach/core/checkpoint.hpp"
#include "ach/train/trainer.hpp"

namespace ach {

namespace {

// Channel argmax of one image in an [N,C,H,W] buffer.
std::vector<uint8_t> argmax_mask(const TensorF& maps, int n) {
  const int C = static_cast<int>(maps.dim(1));
  const int64_t hw = maps.dim(2) * maps.dim(3);
  const float* base = maps.data().data() + static_cast<int64_t>(n) * C * hw;
  std::vector<uint8_t> out(static_cast<size_t>(hw));
  for (int64_t i = 0; i < hw; ++i) {
    int best = 0;
    float best_v = base[i];
    for (int c = 1; c < C; ++c) {
      float v = base[c * hw + i];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    out[i] = static_cast<uint8_t>(best);
  }
  return out;
}

template <class Fn>
void for_each_batch(const std::vector<Sample>& samples, int batch, Fn&& fn) {
  NoGradGuard guard;
  for (size_t at = 0; at < samples.size(); at += static_cast<size_t>(batch)) {
    std::vector<const Sample*> chunk;
    for (size_t i = at; i < std::min(samples.size(), at + static_cast<size_t>(batch)); ++i)
      chunk.push_back(&samples[i]);
    fn(chunk, make_batch(chunk));
  }
}

}  // namespace

std::vector<std::vector<DetBox>> predict_boxes(const Achelous<float>& model,
                                               const std::vector<Sample>& samples,
                                               const EvalOptions& opt) {
  std::vector<std::vector<DetBox>> out;
  for_each_batch(samples, opt.batch, [&](const std::vector<const Sample*>& chunk,
                                         const Batch& b) {
    DetPrediction<float> det = model.forward_det_only(b.image, b.rvp);
    auto decoded = decode_boxes(det, model.config().image_size, opt.score_thresh);
    for (auto& boxes : decoded) out.push_back(nms(std::move(boxes), opt.nms_iou));
  });
  return out;
}

EvalResult evaluate_model(const Achelous<float>& model, const std::vector<Sample>& samples,
                          const EvalOptions& opt) {
  std::vector<std::vector<DetBox>> preds;
  std::vector<std::vector<GtBox>> gts;
  SegConfusion conf_a(kSegClassesA), conf_b(kSegClassesB), conf_pc(kPointClasses);

  for_each_batch(samples, opt.batch, [&](const std::vector<const Sample*>& chunk,
                                         const Batch& b) {
    ModelOutputs<float> out = model.forward(b.image, b.rvp, b.points, b.mask);
    auto decoded = decode_boxes(out.det, model.config().image_size, opt.score_thresh);
    const int64_t P = out.pc_logits.dim(1);
    const int64_t C = out.pc_logits.dim(2);
    for (size_t n = 0; n < chunk.size(); ++n) {
      preds.push_back(nms(std::move(decoded[n]), opt.nms_iou));
      gts.push_back(chunk[n]->boxes);
      conf_a.add(argmax_mask(out.seg_a, static_cast<int>(n)), chunk[n]->seg_a);
      conf_b.add(argmax_mask(out.seg_b, static_cast<int>(n)), chunk[n]->seg_b);

      std::vector<uint8_t> pc_pred, pc_gt;
      const float* row = out.pc_logits.data().data() + static_cast<int64_t>(n) * P * C;
      for (size_t p = 0; p < chunk[n]->points.size(); ++p) {
        int best = 0;
        for (int c = 1; c < C; ++c)
          if (row[p * C + c] > row[p * C + best]) best = c;
        pc_pred.push_back(static_cast<uint8_t>(best));
        pc_gt.push_back(static_cast<uint8_t>(chunk[n]->point_labels[p]));
      }
      conf_pc.add(pc_pred, pc_gt);
    }
  });

  EvalResult res;
  res.det = compute_map(preds, gts);
  res.seg_a = conf_a.result();
  double tsum = 0;
  int tcount = 0;
  for (int c = 0; c < kNumTargetClasses; ++c)
    if (res.seg_a.per_class[c] >= 0) {
      tsum += res.seg_a.per_class[c];
      ++tcount;
    }
  res.miou_targets = tcount > 0 ? tsum / tcount : 0.0;
  res.miou_drivable = std::max(0.0, res.seg_a.per_class[kDrivableClass]);
  MiouResult wl = conf_b.result();
  res.miou_waterline = std::max(0.0, wl.per_class[1]);
  res.pc = conf_pc.result();
  res.pc_accuracy = conf_pc.accuracy();
  return res;
}

void load_model_weights(Achelous<float>& model, const std::string& path) {
  auto entries = load_checkpoint_map(path);
  for (const auto& [name, tensor] : model.params().items()) {
    auto it = entries.find(name);
    if (it == entries.end())
      throw std::runtime_error("checkpoint " + path + " is missing parameter " + name);
    TensorF* param = model.params().find(name);
    if (it->second.numel() != param->numel())
      throw std::runtime_error("checkpoint " + path + " has wrong size for " + name);
    param->data() = it->second.data();
  }
}

}  // namespace ach
