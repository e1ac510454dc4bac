// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ach/core/tensor.hpp"

namespace ach {

// Momentum SGD: v <- m*v + g, p <- p - lr*v. Every registered parameter must
// carry a gradient when step() runs.
class SgdOptimizer {
 public:
  SgdOptimizer(std::vector<std::pair<std::string, TensorF>> params, float momentum = 0.937f);

  void step(float lr);
  void zero_grad();
  const std::vector<std::pair<std::string, TensorF>>& params() const { return params_; }

 private:
  std::vector<std::pair<std::string, TensorF>> params_;
  std::vector<std::vector<float>> velocity_;
  float momentum_;
};

// Linear warmup from zero over [0, warmup], then cosine from lr0 down to
// lr_min over (warmup, total]. warmup == 0 gives the plain half-cosine
// lr_min + (lr0 - lr_min) * (1 + cos(pi * step / total)) / 2.
float cosine_lr(int64_t step, int64_t total, int64_t warmup, float lr0, float lr_min);

// Exponential moving average of the parameter set with a ramped decay
// d = base * (1 - exp(-step / 2000)), so early steps track the raw weights.
class EmaTracker {
 public:
  explicit EmaTracker(const std::vector<std::pair<std::string, TensorF>>& params,
                      float base_decay = 0.9998f);

  void update(const std::vector<std::pair<std::string, TensorF>>& params, int64_t step);
  // Shadow values in registration order, as named leaf tensors.
  std::vector<std::pair<std::string, TensorF>> snapshot() const;
  // Writes the shadow values into the given parameter set (names must match).
  void copy_to(std::vector<std::pair<std::string, TensorF>>& params) const;
  float last_decay() const { return last_decay_; }

 private:
  std::vector<std::string> names_;
  std::vector<Shape> shapes_;
  std::vector<std::vector<float>> shadow_;
  float base_decay_;
  float last_decay_ = 0.0f;
};

}  // namespace ach
