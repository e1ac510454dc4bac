// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ach/data/synth.hpp"
#include "ach/model/achelous.hpp"
#include "ach/train/det_loss.hpp"
#include "ach/train/losses.hpp"
#include "ach/train/optim.hpp"

namespace ach {

struct TrainConfig {
  int epochs = 100;
  int batch = 32;
  float lr0 = 0.03f;
  float momentum = 0.937f;
  int warmup_epochs = 3;
  float lr_min_ratio = 0.01f;  // lr_min = lr0 * lr_min_ratio
  float ema_decay = 0.9998f;
  uint64_t seed = 1;
  int checkpoint_every = 25;   // epochs; 0 disables periodic checkpoints
  std::string out_dir;         // empty = no CSV log / checkpoints
};

// One training batch in tensor form.
struct Batch {
  TensorF image;               // [N,3,S,S]
  TensorF rvp;                 // [N,3,S,S]
  TensorF points;              // [N,P,5], features scaled to ~unit range
  TensorF mask;                // [N,P]
  TensorF seg_a_onehot;        // [N,9,S,S]
  TensorF seg_b_onehot;        // [N,2,S,S]
  std::vector<int> pc_labels;  // [N*P]
  std::vector<uint8_t> pc_valid;
  std::vector<std::vector<GtBox>> boxes;
};

Batch make_batch(const std::vector<const Sample*>& samples);

// Per-step record; the five task losses mirror the tasks the model solves
// (detection combined, target seg, drivable seg, waterline seg, point cloud).
struct StepStats {
  int64_t step = 0;
  float lr = 0;
  float det = 0, seg_targets = 0, seg_drivable = 0, seg_waterline = 0, pc = 0;
  std::array<float, 4> s{};  // log-variances: det, seg stream, waterline, pc
  float total = 0;
};

class Trainer {
 public:
  Trainer(Achelous<float>& model, const TrainConfig& cfg);

  // One optimizer step on a prepared batch.
  StepStats step(const Batch& batch);

  // Shuffled epochs over the sample set; returns every step's stats.
  std::vector<StepStats> fit(const std::vector<Sample>& data);

  // Overwrites the model weights with the EMA shadow (done once, for eval).
  void apply_ema();
  void save_checkpoint_file(const std::string& path) const;

  TensorF log_vars() { return s_; }
  int64_t steps_taken() const { return step_count_; }
  void set_steps_per_epoch(int64_t n);

 private:
  float current_lr() const;

  Achelous<float>& model_;
  TrainConfig cfg_;
  AnchorGrid grid_;
  TensorF s_;
  SgdOptimizer opt_;
  EmaTracker ema_;
  Rng rng_;
  int64_t step_count_ = 0;
  int64_t steps_per_epoch_ = 1;
};

}  // namespace ach
