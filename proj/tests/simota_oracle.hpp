// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force reference for the SimOTA assigner. Written independently of the
// production code: eligibility, per-anchor costs and dynamic-k are recomputed
// from first principles; the per-GT minimum-cost k-subset is found by explicit
// subset enumeration (k <= 4), then the documented conflict/backfill rules are
// applied. Enumeration over k-subsets and "take the k cheapest" coincide
// mathematically; enumerating proves the production shortcut.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "ach/model/detect.hpp"

namespace ach_test {

struct OracleOut {
  std::vector<int> anchor_gt;
  std::vector<std::vector<int>> gt_anchors;
};

inline double oracle_bce(double z, double t) {
  return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

inline double oracle_iou(const std::array<float, 4>& a, const std::array<float, 4>& b) {
  double ix = std::max(0.0, double(std::min(a[2], b[2])) - double(std::max(a[0], b[0])));
  double iy = std::max(0.0, double(std::min(a[3], b[3])) - double(std::max(a[1], b[1])));
  double inter = ix * iy;
  double ua = double(a[2] - a[0]) * double(a[3] - a[1]) +
              double(b[2] - b[0]) * double(b[3] - b[1]) - inter;
  return ua > 0 ? inter / ua : 0.0;
}

inline OracleOut simota_oracle(const ach::SimOtaInput& in, const std::vector<ach::GtBox>& gts) {
  const int A = static_cast<int>(in.boxes.size());
  const int G = static_cast<int>(gts.size());
  const int C = A > 0 ? static_cast<int>(in.cls_logits[0].size()) : 0;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::vector<double>> cost(G, std::vector<double>(A, inf));
  std::vector<std::vector<double>> iou(G, std::vector<double>(A, 0.0));
  for (int g = 0; g < G; ++g)
    for (int a = 0; a < A; ++a) {
      float px = in.points[a][0], py = in.points[a][1];
      bool inside = px >= gts[g].x1 && px <= gts[g].x2 && py >= gts[g].y1 && py <= gts[g].y2;
      float cx = 0.5f * (gts[g].x1 + gts[g].x2), cy = 0.5f * (gts[g].y1 + gts[g].y2);
      float r = 2.5f * in.strides[a];
      bool near = std::abs(px - cx) <= r && std::abs(py - cy) <= r;
      if (!inside && !near) continue;
      iou[g][a] = oracle_iou(in.boxes[a], {gts[g].x1, gts[g].y1, gts[g].x2, gts[g].y2});
      double c = 0;
      for (int k = 0; k < C; ++k)
        c += oracle_bce(in.cls_logits[a][k], k == gts[g].cls ? 1.0 : 0.0);
      cost[g][a] = c + 3.0 * -std::log(std::max(iou[g][a], 1e-8));
    }

  // dynamic k and the per-GT optimal subset
  std::vector<std::vector<int>> picks(G);
  for (int g = 0; g < G; ++g) {
    std::vector<int> elig;
    for (int a = 0; a < A; ++a)
      if (cost[g][a] < inf) elig.push_back(a);
    if (elig.empty()) continue;
    std::vector<double> ious;
    for (int a : elig) ious.push_back(iou[g][a]);
    std::sort(ious.rbegin(), ious.rend());
    double top = 0;
    for (size_t i = 0; i < std::min<size_t>(10, ious.size()); ++i) top += ious[i];
    int k = static_cast<int>(
        std::clamp<long>(std::lround(top), 1, static_cast<long>(elig.size())));

    std::vector<int> best;
    double best_cost = inf;
    if (k <= 4) {  // full enumeration of index-ordered k-subsets
      std::vector<int> idx(k);
      std::function<void(int, int)> rec = [&](int from, int depth) {
        if (depth == k) {
          double c = 0;
          for (int i : idx) c += cost[g][elig[i]];
          if (c < best_cost) {
            best_cost = c;
            best.clear();
            for (int i : idx) best.push_back(elig[i]);
          }
          return;
        }
        for (int i = from; i <= static_cast<int>(elig.size()) - (k - depth); ++i) {
          idx[depth] = i;
          rec(i + 1, depth + 1);
        }
      };
      rec(0, 0);
    } else {  // k cheapest == min-cost subset
      std::vector<std::pair<double, int>> order;
      for (int a : elig) order.push_back({cost[g][a], a});
      std::sort(order.begin(), order.end());
      for (int i = 0; i < k; ++i) best.push_back(order[i].second);
    }
    std::sort(best.begin(), best.end());
    picks[g] = best;
  }

  // conflict resolution: contested anchor goes to the cheaper GT (lower index
  // wins ties), losers do not re-pick
  std::vector<int> owner(A, -1);
  for (int g = 0; g < G; ++g)
    for (int a : picks[g])
      if (owner[a] < 0 || cost[g][a] < cost[owner[a]][a]) owner[a] = g;
  for (int g = 0; g < G; ++g)
    picks[g].erase(std::remove_if(picks[g].begin(), picks[g].end(),
                                  [&](int a) { return owner[a] != g; }),
                   picks[g].end());

  // backfill: a GT stripped of every pick reclaims its cheapest unowned
  // eligible anchor, in GT index order
  for (int g = 0; g < G; ++g) {
    if (!picks[g].empty()) continue;
    int best_a = -1;
    for (int a = 0; a < A; ++a) {
      if (cost[g][a] == inf || owner[a] >= 0) continue;
      if (best_a < 0 || cost[g][a] < cost[g][best_a]) best_a = a;
    }
    if (best_a >= 0) {
      owner[best_a] = g;
      picks[g].push_back(best_a);
    }
  }

  OracleOut out;
  out.anchor_gt.assign(A, -1);
  for (int g = 0; g < G; ++g)
    for (int a : picks[g]) out.anchor_gt[a] = g;
  out.gt_anchors = picks;
  return out;
}

}  // namespace ach_test
