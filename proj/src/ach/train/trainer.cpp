// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "ach/core/checkpoint.hpp"

namespace ach {

namespace {

// Feature scaling for the point net: positions span ~100 m, velocities
// ~20 m/s, power tops out around the RVP power bound.
constexpr float kPosScale = 100.0f, kVelScale = 20.0f, kPowScale = 60.0f;

void check_finite(float v, const char* task, int64_t step) {
  if (!std::isfinite(v))
    throw std::runtime_error("training aborted: non-finite " + std::string(task) +
                             " loss at step " + std::to_string(step));
}

}  // namespace

Batch make_batch(const std::vector<const Sample*>& samples) {
  if (samples.empty()) throw std::invalid_argument("make_batch: empty batch");
  const int N = static_cast<int>(samples.size());
  const int S = samples[0]->image_size;
  int64_t P = 1;
  for (const Sample* s : samples) {
    if (s->image_size != S) throw std::invalid_argument("make_batch: mixed image sizes");
    P = std::max<int64_t>(P, static_cast<int64_t>(s->points.size()));
  }
  size_t hw = static_cast<size_t>(S) * S;

  Batch b;
  std::vector<float> img(static_cast<size_t>(N) * 3 * hw), rvp(img.size());
  std::vector<float> pts(static_cast<size_t>(N) * P * 5, 0.0f);
  std::vector<float> mask(static_cast<size_t>(N) * P, 0.0f);
  std::vector<float> onea(static_cast<size_t>(N) * kSegClassesA * hw, 0.0f);
  std::vector<float> oneb(static_cast<size_t>(N) * kSegClassesB * hw, 0.0f);
  b.pc_labels.assign(static_cast<size_t>(N) * P, 0);
  b.pc_valid.assign(static_cast<size_t>(N) * P, 0);

  for (int n = 0; n < N; ++n) {
    const Sample& s = *samples[n];
    std::copy(s.image.begin(), s.image.end(), img.begin() + static_cast<size_t>(n) * 3 * hw);
    std::copy(s.rvp.begin(), s.rvp.end(), rvp.begin() + static_cast<size_t>(n) * 3 * hw);
    for (size_t i = 0; i < s.points.size(); ++i) {
      const RadarPoint& p = s.points[i];
      size_t at = (static_cast<size_t>(n) * P + i) * 5;
      pts[at] = p.x / kPosScale;
      pts[at + 1] = p.y / kPosScale;
      pts[at + 2] = p.z / kPosScale;
      pts[at + 3] = p.velocity / kVelScale;
      pts[at + 4] = p.power / kPowScale;
      mask[static_cast<size_t>(n) * P + i] = 1.0f;
      b.pc_labels[static_cast<size_t>(n) * P + i] = s.point_labels[i];
      b.pc_valid[static_cast<size_t>(n) * P + i] = 1;
    }
    for (size_t i = 0; i < hw; ++i) {
      onea[(static_cast<size_t>(n) * kSegClassesA + s.seg_a[i]) * hw + i] = 1.0f;
      oneb[(static_cast<size_t>(n) * kSegClassesB + s.seg_b[i]) * hw + i] = 1.0f;
    }
    b.boxes.push_back(s.boxes);
  }
  b.image = TensorF::from({N, 3, S, S}, std::move(img));
  b.rvp = TensorF::from({N, 3, S, S}, std::move(rvp));
  b.points = TensorF::from({N, P, 5}, std::move(pts));
  b.mask = TensorF::from({N, P}, std::move(mask));
  b.seg_a_onehot = TensorF::from({N, kSegClassesA, S, S}, std::move(onea));
  b.seg_b_onehot = TensorF::from({N, kSegClassesB, S, S}, std::move(oneb));
  return b;
}

Trainer::Trainer(Achelous<float>& model, const TrainConfig& cfg)
    : model_(model),
      cfg_(cfg),
      grid_(make_anchor_grid(model.config().image_size)),
      s_(TensorF::zeros({4}, true)),
      opt_(
          [&] {
            auto params = model.params().items();
            params.emplace_back("loss.log_vars", s_);
            return params;
          }(),
          cfg.momentum),
      ema_(model.params().items(), cfg.ema_decay),
      rng_(cfg.seed ^ 0x7261696eULL) {}

void Trainer::set_steps_per_epoch(int64_t n) {
  steps_per_epoch_ = std::max<int64_t>(1, n);
}

float Trainer::current_lr() const {
  int64_t total = std::max<int64_t>(1, cfg_.epochs * steps_per_epoch_);
  int64_t warmup = std::min<int64_t>(cfg_.warmup_epochs * steps_per_epoch_, total - 1);
  int64_t step = std::min(step_count_ + 1, total);
  return cosine_lr(step, total, warmup, cfg_.lr0, cfg_.lr0 * cfg_.lr_min_ratio);
}

StepStats Trainer::step(const Batch& batch) {
  opt_.zero_grad();
  ModelOutputs<float> out = model_.forward(batch.image, batch.rvp, batch.points, batch.mask);

  DetTargets targets = build_det_targets(out.det, grid_, batch.boxes);
  DetLossParts<float> det = det_loss(out.det, grid_, targets);
  TensorF det_combined = det.combined();

  TensorF dice_a = dice_per_class(softmax(out.seg_a, 1), batch.seg_a_onehot);
  TensorF stream_a = mean(dice_a);
  TensorF wl = dice_loss(softmax(out.seg_b, 1), batch.seg_b_onehot);
  TensorF pc = nll_loss(log_softmax(out.pc_logits, 2), batch.pc_labels, batch.pc_valid);

  TensorF losses = concat<float>({reshape(det_combined, {1}), reshape(stream_a, {1}),
                                  reshape(wl, {1}), reshape(pc, {1})},
                                 0);
  TensorF total = total_loss(losses, s_);

  StepStats st;
  st.step = step_count_ + 1;
  st.lr = current_lr();
  st.det = det_combined.item();
  float tsum = 0;
  for (int c = 0; c < kSegClassesA; ++c)
    if (c != kDrivableClass) tsum += dice_a.data()[c];
  st.seg_targets = tsum / (kSegClassesA - 1);
  st.seg_drivable = dice_a.data()[kDrivableClass];
  st.seg_waterline = wl.item();
  st.pc = pc.item();
  for (int t = 0; t < 4; ++t) st.s[t] = s_.data()[t];
  st.total = total.item();
  check_finite(st.det, "detection", st.step);
  check_finite(st.seg_targets, "target segmentation", st.step);
  check_finite(st.seg_drivable, "drivable segmentation", st.step);
  check_finite(st.seg_waterline, "waterline segmentation", st.step);
  check_finite(st.pc, "point cloud segmentation", st.step);
  check_finite(st.total, "combined", st.step);

  total.backward();
  opt_.step(st.lr);
  ++step_count_;
  ema_.update(model_.params().items(), step_count_);
  return st;
}

std::vector<StepStats> Trainer::fit(const std::vector<Sample>& data) {
  if (data.empty()) throw std::invalid_argument("fit: empty dataset");
  const int64_t n = static_cast<int64_t>(data.size());
  const int64_t per_epoch = (n + cfg_.batch - 1) / cfg_.batch;
  set_steps_per_epoch(per_epoch);

  namespace fs = std::filesystem;
  std::ofstream csv;
  if (!cfg_.out_dir.empty()) {
    fs::create_directories(cfg_.out_dir);
    csv.open(fs::path(cfg_.out_dir) / "train_log.csv");
    csv << "step,lr,det,seg_targets,seg_drivable,seg_waterline,pc,"
           "s_det,s_seg,s_waterline,s_pc,total\n";
  }

  // A dataset that fits in one batch is assembled once and reused.
  bool single = n <= cfg_.batch;
  Batch whole;
  if (single) {
    std::vector<const Sample*> all;
    for (const Sample& s : data) all.push_back(&s);
    whole = make_batch(all);
  }

  std::vector<StepStats> history;
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (int64_t i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng_.uniform_int(0, i)]);
    for (int64_t at = 0; at < n; at += cfg_.batch) {
      StepStats st;
      if (single) {
        st = step(whole);
      } else {
        std::vector<const Sample*> chunk;
        for (int64_t i = at; i < std::min(n, at + cfg_.batch); ++i)
          chunk.push_back(&data[order[i]]);
        st = step(make_batch(chunk));
      }
      if (csv.is_open()) {
        csv << st.step << ',' << st.lr << ',' << st.det << ',' << st.seg_targets << ','
            << st.seg_drivable << ',' << st.seg_waterline << ',' << st.pc << ',' << st.s[0]
            << ',' << st.s[1] << ',' << st.s[2] << ',' << st.s[3] << ',' << st.total << '\n';
      }
      history.push_back(st);
    }
    if (!cfg_.out_dir.empty() && cfg_.checkpoint_every > 0 &&
        (epoch + 1) % cfg_.checkpoint_every == 0)
      save_checkpoint_file(
          (fs::path(cfg_.out_dir) / ("epoch_" + std::to_string(epoch + 1) + ".achl")).string());
  }
  if (!cfg_.out_dir.empty())
    save_checkpoint_file((fs::path(cfg_.out_dir) / "model_final.achl").string());
  return history;
}

void Trainer::apply_ema() {
  auto params = model_.params().items();
  ema_.copy_to(params);
}

void Trainer::save_checkpoint_file(const std::string& path) const {
  auto entries = ema_.snapshot();
  entries.emplace_back("loss.log_vars", s_.detach());
  save_checkpoint(path, entries);
}

}  // namespace ach
