// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "ach/core/rng.hpp"
#include "ach/data/types.hpp"

namespace ach {

enum class Degradation { kNone, kDark, kFog, kDroplet };

Degradation degradation_from_name(const std::string& name);
std::string degradation_name(Degradation d);

// Parameters of the procedural water-scene generator. Every sample is a pure
// function of (seed, index, degradation); the degradation stage draws from its
// own random stream so visual modes never perturb geometry or radar.
struct SceneSpec {
  uint64_t seed = 1;
  int min_targets = 1, max_targets = 4;
  int horizon_min = 96, horizon_max = 160;  // snapped to multiples of 4
  float clutter_rate = 4.0f;                // expected clutter points per frame
  Degradation degradation = Degradation::kNone;
  int image_size = 320;
  float velocity_eps = 1.0f;  // annotation velocity-clustering width
  RvpBounds bounds;
};

// Shared camera/radar rig for all synthetic scenes.
Calibration scene_calibration(int image_size);

Sample generate_sample(const SceneSpec& spec, int index);

// Dataset directory layout:
//   images/<id>.ppm          P6 binary, 8-bit
//   rvp/<id>.achl            tensor checkpoint holding "rvp" [3,S,S]
//   pointclouds/<id>.txt     "x y z velocity power" per line
//   annotations/<id>.xml     VOC-style boxes
//   masks/<id>_a.pgm         9-class labels, P5 binary
//   masks/<id>_b.pgm         waterline labels, P5 binary
//   splits/{train,val,test}.txt   ids, 7:2:1 by index
//   calibration.txt, meta.txt
// Point labels are re-derived on load by re-running the annotation pipeline
// (deterministic given the stored cloud, boxes and calibration).
void export_dataset(const std::vector<Sample>& samples, const std::vector<int>& indices,
                    const SceneSpec& spec, const std::string& root);

struct DatasetHandle {
  std::string root;
  std::vector<std::string> train_ids, val_ids, test_ids;
  Calibration calib;
  RvpBounds bounds;
  float velocity_eps = 1.0f;
  int image_size = 320;
};

DatasetHandle load_dataset(const std::string& root);
Sample load_sample(const DatasetHandle& ds, const std::string& id);

// Low-level image I/O used by the dataset and the inference overlays.
void save_ppm(const std::string& path, const std::vector<float>& chw, int size);
std::vector<float> load_ppm(const std::string& path, int* size_out);
void save_pgm(const std::string& path, const std::vector<uint8_t>& labels, int size);
std::vector<uint8_t> load_pgm(const std::string& path, int* size_out);

}  // namespace ach
