// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/data/radar_geom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace ach {

ProjectionResult project_points(const RadarFrame& points, const Calibration& calib) {
  ProjectionResult res;
  const auto& e = calib.extrinsic;
  for (size_t i = 0; i < points.size(); ++i) {
    const RadarPoint& p = points[i];
    float xc = e[0] * p.x + e[1] * p.y + e[2] * p.z + e[3];
    float yc = e[4] * p.x + e[5] * p.y + e[6] * p.z + e[7];
    float zc = e[8] * p.x + e[9] * p.y + e[10] * p.z + e[11];
    if (zc <= 0) {
      ++res.culled;
      continue;
    }
    float u = calib.fx * xc / zc + calib.cx;
    float v = calib.fy * yc / zc + calib.cy;
    if (u < 0 || u >= static_cast<float>(calib.width) || v < 0 ||
        v >= static_cast<float>(calib.height)) {
      ++res.culled;
      continue;
    }
    res.points.push_back({static_cast<int>(i), u, v, zc});
  }
  return res;
}

std::vector<float> rasterize_rvp(const ProjectionResult& proj, const RadarFrame& points,
                                 const Calibration& calib, const RvpBounds& bounds,
                                 int out_size) {
  if (bounds.r_max <= 0 || bounds.v_max <= bounds.v_min || bounds.p_max <= bounds.p_min)
    throw std::invalid_argument("rasterize_rvp: degenerate normalization bounds");
  int W = calib.width, H = calib.height;
  std::vector<float> map(3 * static_cast<size_t>(H) * W, 0.0f);
  // Winner per pixel: (range, point index) — nearest range, then lowest index,
  // which makes the result independent of input point order.
  std::vector<std::pair<float, int>> winner(static_cast<size_t>(H) * W,
                                            {std::numeric_limits<float>::infinity(), -1});
  auto norm01 = [](float v) { return std::clamp(v, 0.0f, 1.0f); };
  for (const ProjectedPoint& pp : proj.points) {
    int px = std::clamp(static_cast<int>(std::lround(pp.u)), 0, W - 1);
    int py = std::clamp(static_cast<int>(std::lround(pp.v)), 0, H - 1);
    const RadarPoint& rp = points[pp.index];
    float r = rp.range();
    size_t cell = static_cast<size_t>(py) * W + px;
    auto key = std::make_pair(r, pp.index);
    if (key < winner[cell]) {
      winner[cell] = key;
      size_t hw = static_cast<size_t>(H) * W;
      map[cell] = norm01(r / bounds.r_max);
      map[hw + cell] = norm01((rp.velocity - bounds.v_min) / (bounds.v_max - bounds.v_min));
      map[2 * hw + cell] = norm01((rp.power - bounds.p_min) / (bounds.p_max - bounds.p_min));
    }
  }
  if (out_size == W && out_size == H) return map;
  std::vector<float> resized(3 * static_cast<size_t>(out_size) * out_size, 0.0f);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < out_size; ++i)
      for (int j = 0; j < out_size; ++j) {
        int si = std::min(H - 1, i * H / out_size);
        int sj = std::min(W - 1, j * W / out_size);
        resized[(static_cast<size_t>(c) * out_size + i) * out_size + j] =
            map[(static_cast<size_t>(c) * H + si) * W + sj];
      }
  return resized;
}

std::vector<int> annotate_points(const RadarFrame& points, const ProjectionResult& proj,
                                 const std::vector<GtBox>& boxes, float velocity_eps) {
  std::vector<int> labels(points.size(), kClutterClass);
  // Pixel location per point (unprojected points stay clutter).
  std::vector<int> box_of(points.size(), -1);
  std::vector<std::vector<int>> members(boxes.size());
  for (const ProjectedPoint& pp : proj.points) {
    int best = -1;
    float best_area = std::numeric_limits<float>::infinity();
    for (size_t b = 0; b < boxes.size(); ++b) {
      const GtBox& gt = boxes[b];
      if (pp.u < gt.x1 || pp.u > gt.x2 || pp.v < gt.y1 || pp.v > gt.y2) continue;
      float area = (gt.x2 - gt.x1) * (gt.y2 - gt.y1);
      if (area < best_area) {
        best_area = area;
        best = static_cast<int>(b);
      }
    }
    if (best >= 0) {
      box_of[pp.index] = best;
      members[best].push_back(pp.index);
    }
  }
  for (size_t b = 0; b < boxes.size(); ++b) {
    if (members[b].empty()) continue;
    std::vector<float> vels;
    for (int i : members[b]) vels.push_back(points[i].velocity);
    std::sort(vels.begin(), vels.end());
    float median = vels.size() % 2 == 1
                       ? vels[vels.size() / 2]
                       : 0.5f * (vels[vels.size() / 2 - 1] + vels[vels.size() / 2]);
    for (int i : members[b])
      if (std::abs(points[i].velocity - median) <= velocity_eps) labels[i] = boxes[b].cls;
  }
  return labels;
}

void save_pointcloud(const std::string& path, const RadarFrame& points) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write point cloud: " + path);
  f.precision(9);
  for (const RadarPoint& p : points)
    f << p.x << ' ' << p.y << ' ' << p.z << ' ' << p.velocity << ' ' << p.power << '\n';
}

RadarFrame load_pointcloud(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read point cloud: " + path);
  RadarFrame points;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    RadarPoint p;
    if (!(ss >> p.x >> p.y >> p.z >> p.velocity >> p.power))
      throw std::runtime_error("malformed point cloud line in " + path);
    points.push_back(p);
  }
  return points;
}

void save_calibration(const std::string& path, const Calibration& calib) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write calibration: " + path);
  f.precision(9);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c)
      f << 'e' << r << c << ' ' << calib.extrinsic[r * 4 + c] << '\n';
  f << "fx " << calib.fx << "\nfy " << calib.fy << "\ncx " << calib.cx << "\ncy " << calib.cy
    << "\nwidth " << calib.width << "\nheight " << calib.height << '\n';
}

Calibration load_calibration(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read calibration: " + path);
  std::map<std::string, float> kv;
  std::string key;
  float value;
  while (f >> key >> value) kv[key] = value;
  Calibration c;
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 4; ++col) {
      std::string k = "e" + std::to_string(r) + std::to_string(col);
      if (!kv.count(k)) throw std::runtime_error("calibration missing key " + k + ": " + path);
      c.extrinsic[r * 4 + col] = kv[k];
    }
  c.extrinsic[12] = 0;
  c.extrinsic[13] = 0;
  c.extrinsic[14] = 0;
  c.extrinsic[15] = 1;
  for (const char* k : {"fx", "fy", "cx", "cy", "width", "height"})
    if (!kv.count(k)) throw std::runtime_error(std::string("calibration missing key ") + k);
  c.fx = kv["fx"];
  c.fy = kv["fy"];
  c.cx = kv["cx"];
  c.cy = kv["cy"];
  c.width = static_cast<int>(kv["width"]);
  c.height = static_cast<int>(kv["height"]);
  return c;
}

}  // namespace ach
