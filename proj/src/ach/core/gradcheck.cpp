// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/core/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace ach {

GradReport grad_check(const std::function<TensorD(const std::vector<TensorD>&)>& fn,
                      std::vector<TensorD> inputs, double eps, double floor) {
  for (auto& in : inputs) in.set_requires_grad(true);
  TensorD loss = fn(inputs);
  if (loss.numel() != 1) throw std::invalid_argument("grad_check: fn must return a scalar");
  for (auto& in : inputs) in.zero_grad();
  loss.backward();

  GradReport rep;
  NoGradGuard ng;
  for (size_t i = 0; i < inputs.size(); ++i) {
    auto impl = inputs[i].impl();
    // copy before perturbing; an input the graph never touched has no buffer
    std::vector<double> analytic = impl->grad;
    analytic.resize(impl->numel(), 0.0);
    for (int64_t j = 0; j < impl->numel(); ++j) {
      double saved = impl->data[j];
      impl->data[j] = saved + eps;
      double fp = fn(inputs).item();
      impl->data[j] = saved - eps;
      double fm = fn(inputs).item();
      impl->data[j] = saved;
      double num = (fp - fm) / (2 * eps);
      double ana = analytic[j];
      double err = std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), floor});
      if (err > rep.max_rel_err) {
        rep.max_rel_err = err;
        rep.worst_input = static_cast<int>(i);
        rep.worst_elem = j;
        rep.analytic = ana;
        rep.numeric = num;
      }
    }
  }
  return rep;
}

}  // namespace ach
