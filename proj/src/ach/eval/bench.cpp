// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/eval/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "ach/core/macs.hpp"
#include "ach/core/parallel.hpp"

namespace ach {

namespace {

using Clock = std::chrono::steady_clock;

// Parameters whose dotted name starts with any of the given prefixes.
int64_t params_under(const Achelous<float>& model, const std::vector<std::string>& prefixes) {
  int64_t n = 0;
  for (const auto& [name, t] : model.params().items())
    for (const std::string& p : prefixes)
      if (name.rfind(p, 0) == 0) {
        n += t.numel();
        break;
      }
  return n;
}

BenchRow time_fn(const std::string& name, int runs, int warmups,
                 const std::function<void()>& fn) {
  for (int i = 0; i < warmups; ++i) fn();
  std::vector<double> ms(static_cast<size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    auto t0 = Clock::now();
    fn();
    ms[i] = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  }
  BenchRow row;
  row.name = name;
  row.runs = runs;
  for (double v : ms) row.mean_ms += v;
  row.mean_ms /= runs;
  for (double v : ms) row.stddev_ms += (v - row.mean_ms) * (v - row.mean_ms);
  row.stddev_ms = std::sqrt(row.stddev_ms / runs);
  row.stable = row.stddev_ms / row.mean_ms < 0.15;
  return row;
}

}  // namespace

BenchReport benchmark_model(const ModelConfig& cfg, int runs, int warmups, int points,
                            uint64_t seed) {
  int prev_threads = num_threads();
  set_num_threads(1);
  NoGradGuard guard;

  Achelous<float> model(cfg, seed);
  Rng rng(seed ^ 0xBE4C);
  const int S = cfg.image_size;
  TensorF image = TensorF::uniform({1, 3, S, S}, 0.0f, 1.0f, rng);
  TensorF rvp = TensorF::uniform({1, 3, S, S}, 0.0f, 1.0f, rng);
  TensorF pts = TensorF::uniform({1, points, 5}, -0.5f, 0.5f, rng);
  TensorF mask = TensorF::ones({1, points});

  // The shared top-down pyramid; stream-specific pieces are excluded below.
  const std::vector<std::string> neck_shared = {"neck.lat3", "neck.lat4", "neck.lat5",
                                                "neck.block5", "neck.merge4", "neck.merge3"};
  auto plus = [](std::vector<std::string> v, std::vector<std::string> w) {
    v.insert(v.end(), w.begin(), w.end());
    return v;
  };
  bool radar_in_seg = cfg.fusion == FusionMode::kBackboneFpn;
  std::vector<std::string> det_prefixes =
      plus(neck_shared, {"encoder.", "rcnet.", "det_head."});
  std::vector<std::string> seg_a_prefixes =
      plus(neck_shared, {"encoder.", "neck.lat2a", "neck.sa_a", "neck.block_a", "seg_a."});
  std::vector<std::string> seg_b_prefixes =
      plus(neck_shared, {"encoder.", "neck.lat2b", "neck.sa_b", "neck.block_b", "seg_b."});
  if (radar_in_seg) {
    seg_a_prefixes.push_back("rcnet.");
    seg_b_prefixes.push_back("rcnet.");
  }

  struct Task {
    std::string name;
    std::function<void()> fn;
    std::vector<std::string> prefixes;
  };
  std::vector<Task> tasks = {
      {"unified", [&] { model.forward(image, rvp, pts, mask); }, {""}},
      {"det_only", [&] { model.forward_det_only(image, rvp); }, det_prefixes},
      {"seg_targets_only", [&] { model.forward_seg_a_only(image, rvp); }, seg_a_prefixes},
      {"waterline_only", [&] { model.forward_seg_b_only(image, rvp); }, seg_b_prefixes},
      {"points_only", [&] { model.forward_points_only(pts, mask); }, {"pointnet."}},
  };

  BenchReport report;
  report.config = cfg.size + "/" + (cfg.neck == NeckVariant::kGhost ? "ghost" : "csp") + "/" +
                  (cfg.fusion == FusionMode::kFpn ? "fpn" : "backbone_fpn");
  for (const Task& t : tasks) {
    reset_macs();
    t.fn();
    int64_t one_pass = macs();
    BenchRow row = time_fn(t.name, runs, warmups, t.fn);
    row.gmacs = static_cast<double>(one_pass) / 1e9;
    row.params = params_under(model, t.prefixes);
    report.rows.push_back(row);
  }
  report.unified_ms = report.rows[0].mean_ms;
  for (size_t i = 1; i < report.rows.size(); ++i) {
    report.sum_standalone_ms += report.rows[i].mean_ms;
    report.max_standalone_ms = std::max(report.max_standalone_ms, report.rows[i].mean_ms);
  }

  set_num_threads(prev_threads);
  return report;
}

void write_bench_csv(const std::vector<BenchReport>& reports, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write benchmark csv: " + path);
  f << "config,task,mean_ms,stddev_ms,stable,runs,params,gmacs\n";
  for (const BenchReport& r : reports) {
    for (const BenchRow& row : r.rows)
      f << r.config << ',' << row.name << ',' << row.mean_ms << ',' << row.stddev_ms << ','
        << (row.stable ? 1 : 0) << ',' << row.runs << ',' << row.params << ',' << row.gmacs
        << '\n';
    f << r.config << ",sum_standalone," << r.sum_standalone_ms << ",,,,,\n";
    f << r.config << ",max_standalone," << r.max_standalone_ms << ",,,,,\n";
  }
}

void write_bench_svg(const std::vector<BenchReport>& reports, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write benchmark figure: " + path);
  double max_ms = 1.0;
  for (const BenchReport& r : reports)
    max_ms = std::max({max_ms, r.unified_ms, r.sum_standalone_ms});

  const int bar_h = 22, gap = 8, group_gap = 18, left = 190, width = 640;
  const double scale = (width - left - 80) / max_ms;
  int rows = 0;
  for (const BenchReport& r : reports) rows += static_cast<int>(r.rows.size()) + 1;
  int height = 40 + rows * (bar_h + gap) + static_cast<int>(reports.size()) * group_gap;

  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
    << "' font-family='monospace' font-size='12'>\n";
  f << "<text x='10' y='20' font-size='14'>Forward latency (ms), single thread</text>\n";
  int y = 40;
  for (const BenchReport& r : reports) {
    for (size_t i = 0; i < r.rows.size(); ++i) {
      const BenchRow& row = r.rows[i];
      const char* color = i == 0 ? "#2b6cb0" : "#a0aec0";
      f << "<text x='10' y='" << y + bar_h - 7 << "'>" << r.config << " " << row.name
        << "</text>\n";
      f << "<rect x='" << left << "' y='" << y << "' width='" << row.mean_ms * scale
        << "' height='" << bar_h << "' fill='" << color << "'/>\n";
      f << "<text x='" << left + row.mean_ms * scale + 6 << "' y='" << y + bar_h - 7 << "'>"
        << static_cast<int>(row.mean_ms * 10) / 10.0 << (row.stable ? "" : " (unstable)")
        << "</text>\n";
      y += bar_h + gap;
    }
    f << "<text x='10' y='" << y + bar_h - 7 << "'>" << r.config
      << " sum_standalone</text>\n";
    f << "<rect x='" << left << "' y='" << y << "' width='" << r.sum_standalone_ms * scale
      << "' height='" << bar_h << "' fill='#e53e3e'/>\n";
    f << "<text x='" << left + r.sum_standalone_ms * scale + 6 << "' y='" << y + bar_h - 7
      << "'>" << static_cast<int>(r.sum_standalone_ms * 10) / 10.0 << "</text>\n";
    y += bar_h + gap + group_gap;
  }
  f << "</svg>\n";
}

}  // namespace ach
