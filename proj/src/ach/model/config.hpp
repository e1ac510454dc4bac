// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace ach {

enum class NeckVariant { kGhost, kCsp };
enum class FusionMode { kFpn, kBackboneFpn };

// Class inventory of the synthetic water-scene world.
inline constexpr int kNumTargetClasses = 7;      // detection + point-cloud targets
inline constexpr int kSegClassesA = 9;           // 7 targets + drivable + background
inline constexpr int kSegClassesB = 2;           // waterline vs background
inline constexpr int kPointClasses = 8;          // 7 targets + clutter

struct ModelConfig {
  std::string size = "s0";                        // s0 | s1 | s2
  std::array<int, 4> stage_channels = {24, 48, 96, 176};
  int stem_channels = 16;
  std::array<int, 4> stage_depths = {2, 2, 6, 4};
  int fpn_width = 64;
  int image_size = 320;
  NeckVariant neck = NeckVariant::kGhost;
  FusionMode fusion = FusionMode::kFpn;
  bool radar_deform = true;   // false = plain-conv ablation inside RadarConv
  bool radar_enabled = true;  // false = camera-only (RVP forced to zero)

  // Radar branch widths: ceil(encoder C3..C5 / 4).
  std::array<int, 3> rcnet_channels() const {
    auto q = [](int c) { return (c + 3) / 4; };
    return {q(stage_channels[1]), q(stage_channels[2]), q(stage_channels[3])};
  }

  // Detection head width matches the FPN; segmentation heads run a narrow
  // 3x3 at stride 4 so the full-resolution classifier stays cheap.
  int head_width() const { return fpn_width; }
  int seg_head_width() const { return fpn_width / 4; }

  static ModelConfig for_size(const std::string& tag) {
    ModelConfig c;
    c.size = tag;
    if (tag == "s0") {
      c.stage_channels = {24, 48, 96, 176};
      c.stem_channels = 16;
      c.fpn_width = 64;
    } else if (tag == "s1") {
      c.stage_channels = {32, 64, 128, 256};
      c.stem_channels = 24;
      c.fpn_width = 96;
    } else if (tag == "s2") {
      c.stage_channels = {48, 96, 192, 384};
      c.stem_channels = 32;
      c.fpn_width = 128;
    } else {
      throw std::invalid_argument("unknown model size: " + tag);
    }
    return c;
  }
};

}  // namespace ach
