// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "ach/core/tensor.hpp"

namespace ach {

struct GradReport {
  double max_rel_err = 0;
  int worst_input = -1;       // index into the inputs vector
  int64_t worst_elem = -1;    // flat element index within that input
  double analytic = 0, numeric = 0;
};

// Central-difference gradient check in 64-bit. `fn` must map the given inputs
// to a scalar tensor. Every input is treated as differentiable. The error per
// element is |analytic - numeric| / max(|analytic|, |numeric|, floor); the
// floor guards the quotient where the true gradient is ~0.
GradReport grad_check(const std::function<TensorD(const std::vector<TensorD>&)>& fn,
                      std::vector<TensorD> inputs, double eps = 1e-5, double floor = 1e-3);

}  // namespace ach
