// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ach/model/achelous.hpp"

namespace ach {

struct BenchRow {
  std::string name;
  double mean_ms = 0;
  double stddev_ms = 0;
  bool stable = true;  // stddev/mean < 0.15 after warmup
  int runs = 0;
  int64_t params = 0;
  double gmacs = 0;  // analytic multiply-accumulates of one forward, in 1e9
};

struct BenchReport {
  std::string config;
  std::vector<BenchRow> rows;  // unified + the four standalone trims
  double unified_ms = 0;
  double sum_standalone_ms = 0;
  double max_standalone_ms = 0;
};

// Times the unified five-task forward against four width-matched single-task
// trims of the same network, single-threaded on a monotone clock. `points`
// sets the synthetic cloud size fed to the point branch.
BenchReport benchmark_model(const ModelConfig& cfg, int runs = 100, int warmups = 10,
                            int points = 64, uint64_t seed = 7);

void write_bench_csv(const std::vector<BenchReport>& reports, const std::string& path);
void write_bench_svg(const std::vector<BenchReport>& reports, const std::string& path);

}  // namespace ach
