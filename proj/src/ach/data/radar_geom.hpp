// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ach/data/types.hpp"

namespace ach {

// A radar point landed on the image plane.
struct ProjectedPoint {
  int index = 0;     // into the source cloud
  float u = 0, v = 0;  // pixel coordinates
  float depth = 0;     // camera-frame Z
};

struct ProjectionResult {
  std::vector<ProjectedPoint> points;
  int culled = 0;  // behind the camera or outside the image
};

// Rigid transform into the camera frame, then pinhole projection, culling
// points behind the camera or off the image.
ProjectionResult project_points(const RadarFrame& points, const Calibration& calib);

// Rasterize projected points into a 3-channel (range, velocity, power) map at
// the calibration resolution, normalized to [0,1] by fixed bounds; on a pixel
// collision the nearest-range point wins (ties to the lowest point index).
// The map is then nearest-neighbor resized to out_size x out_size.
std::vector<float> rasterize_rvp(const ProjectionResult& proj, const RadarFrame& points,
                                 const Calibration& calib, const RvpBounds& bounds,
                                 int out_size);

// A point takes a box's class iff its pixel is inside the box and its velocity
// sits within eps of the median velocity of the points inside that box;
// otherwise clutter. Containment in several boxes resolves to the smallest.
std::vector<int> annotate_points(const RadarFrame& points, const ProjectionResult& proj,
                                 const std::vector<GtBox>& boxes, float velocity_eps);

// Text I/O: point clouds as "x y z velocity power" lines; calibration as a
// key-value file (e00..e23 extrinsic rows, fx fy cx cy, width height).
void save_pointcloud(const std::string& path, const RadarFrame& points);
RadarFrame load_pointcloud(const std::string& path);
void save_calibration(const std::string& path, const Calibration& calib);
Calibration load_calibration(const std::string& path);

}  // namespace ach
