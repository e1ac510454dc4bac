// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ach {

// One 4D-radar return in the radar frame.
struct RadarPoint {
  float x = 0, y = 0, z = 0;  // meters
  float velocity = 0;         // radial m/s
  float power = 0;            // reflected power (linear scale)
  float range() const { return std::sqrt(x * x + y * y + z * z); }
};

using RadarFrame = std::vector<RadarPoint>;

// Radar->camera extrinsic plus pinhole intrinsics.
struct Calibration {
  std::array<float, 16> extrinsic = {1, 0, 0, 0, 0, 1, 0, 0,
                                     0, 0, 1, 0, 0, 0, 0, 1};  // row-major 4x4
  float fx = 160, fy = 160, cx = 160, cy = 160;
  int width = 320, height = 320;
};

// Fixed normalization bounds for RVP rasterization; fixed (not per-frame) so
// values stay comparable across frames.
struct RvpBounds {
  float r_max = 100.0f;
  float v_min = -20.0f, v_max = 20.0f;
  float p_min = 0.0f, p_max = 60.0f;
};

// Axis-aligned ground-truth box in pixel coordinates.
struct GtBox {
  float x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  int cls = 0;
};

// The seven detectable classes; segmentation stream A adds drivable water and
// background, the point-cloud task adds clutter.
inline constexpr const char* kClassNames[7] = {"pier", "buoy",   "sailor", "ship",
                                               "boat", "vessel", "kayak"};
inline constexpr int kDrivableClass = 7;    // seg stream A channel
inline constexpr int kBackgroundClass = 8;  // seg stream A channel
inline constexpr int kClutterClass = 7;     // point-cloud label

// One synchronized training example.
struct Sample {
  int image_size = 320;
  std::vector<float> image;       // 3*S*S, CHW, values in [0,1]
  std::vector<float> rvp;         // 3*S*S, CHW, values in [0,1]
  RadarFrame points;              // radar-frame point cloud
  std::vector<int> point_labels;  // per point: 0..6 target class, 7 clutter
  std::vector<GtBox> boxes;
  std::vector<uint8_t> seg_a;     // S*S labels: 0..6 target, 7 drivable, 8 background
  std::vector<uint8_t> seg_b;     // S*S labels: 1 waterline band, 0 elsewhere
};

}  // namespace ach
