// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/train/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ach {

SgdOptimizer::SgdOptimizer(std::vector<std::pair<std::string, TensorF>> params, float momentum)
    : params_(std::move(params)), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const auto& [name, p] : params_)
    velocity_.emplace_back(static_cast<size_t>(p.numel()), 0.0f);
}

void SgdOptimizer::step(float lr) {
  for (size_t i = 0; i < params_.size(); ++i) {
    TensorF& p = params_[i].second;
    if (!p.has_grad())
      throw std::runtime_error("sgd_step: no gradient for parameter " + params_[i].first);
    const std::vector<float>& g = p.grad();
    std::vector<float>& v = velocity_[i];
    std::vector<float>& w = p.data();
    for (size_t j = 0; j < v.size(); ++j) {
      v[j] = momentum_ * v[j] + g[j];
      w[j] -= lr * v[j];
    }
  }
}

void SgdOptimizer::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

float cosine_lr(int64_t step, int64_t total, int64_t warmup, float lr0, float lr_min) {
  if (step < 0 || total <= 0 || step > total || warmup < 0 || warmup >= total)
    throw std::invalid_argument("cosine_lr: bad step/total/warmup");
  if (step <= warmup && warmup > 0)
    return lr0 * static_cast<float>(step) / static_cast<float>(warmup);
  double phase = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return static_cast<float>(lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(M_PI * phase)));
}

EmaTracker::EmaTracker(const std::vector<std::pair<std::string, TensorF>>& params,
                       float base_decay)
    : base_decay_(base_decay) {
  for (const auto& [name, p] : params) {
    names_.push_back(name);
    shapes_.push_back(p.shape());
    shadow_.push_back(p.data());
  }
}

void EmaTracker::update(const std::vector<std::pair<std::string, TensorF>>& params,
                        int64_t step) {
  if (params.size() != names_.size())
    throw std::invalid_argument("ema_update: parameter count mismatch");
  float d = base_decay_ * (1.0f - std::exp(-static_cast<float>(step) / 2000.0f));
  last_decay_ = d;
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != names_[i])
      throw std::invalid_argument("ema_update: parameter name mismatch at " + params[i].first);
    const std::vector<float>& p = params[i].second.data();
    std::vector<float>& e = shadow_[i];
    for (size_t j = 0; j < e.size(); ++j) e[j] = d * e[j] + (1.0f - d) * p[j];
  }
}

std::vector<std::pair<std::string, TensorF>> EmaTracker::snapshot() const {
  std::vector<std::pair<std::string, TensorF>> out;
  for (size_t i = 0; i < names_.size(); ++i)
    out.emplace_back(names_[i], TensorF::from(shapes_[i], shadow_[i]));
  return out;
}

void EmaTracker::copy_to(std::vector<std::pair<std::string, TensorF>>& params) const {
  if (params.size() != names_.size())
    throw std::invalid_argument("ema copy_to: parameter count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != names_[i])
      throw std::invalid_argument("ema copy_to: parameter name mismatch at " + params[i].first);
    params[i].second.data() = shadow_[i];
  }
}

}  // namespace ach
