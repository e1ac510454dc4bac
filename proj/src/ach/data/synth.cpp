// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ach/core/checkpoint.hpp"
#include "ach/data/radar_geom.hpp"

namespace ach {
namespace {

constexpr float kCameraHeight = 3.0f;   // meters above the water plane
constexpr float kPowerScale = 1500.0f;  // power = kPowerScale / range^2

// Real-world size (width, height in meters) per class.
constexpr float kDimsW[7] = {6.0f, 0.8f, 0.6f, 9.0f, 4.0f, 6.5f, 2.8f};
constexpr float kDimsH[7] = {1.2f, 0.8f, 1.7f, 4.5f, 1.8f, 3.0f, 0.6f};
// Depth placement range per class, sized so targets stay well resolved.
constexpr float kDepthMin[7] = {16, 6, 6, 16, 10, 10, 6};
constexpr float kDepthMax[7] = {60, 16, 16, 60, 36, 36, 16};
// Flat-shade color per class.
constexpr float kColors[7][3] = {{0.45f, 0.30f, 0.15f}, {0.90f, 0.20f, 0.10f},
                                 {0.95f, 0.80f, 0.15f}, {0.50f, 0.50f, 0.58f},
                                 {0.88f, 0.88f, 0.82f}, {0.15f, 0.42f, 0.22f},
                                 {0.55f, 0.20f, 0.62f}};

// Silhouette test in local coordinates lx,ly in [0,1] (ly grows downward).
bool inside_shape(int cls, float lx, float ly) {
  switch (cls) {
    case 0: return true;                                                   // pier: full slab
    case 1: {                                                              // buoy: disc
      float dx = lx - 0.5f, dy = ly - 0.5f;
      return dx * dx + dy * dy <= 0.25f;
    }
    case 2: {                                                              // sailor: body+head
      bool body = std::abs(lx - 0.5f) <= 0.18f && ly >= 0.30f;
      float dx = lx - 0.5f, dy = ly - 0.15f;
      return body || dx * dx + dy * dy <= 0.0225f;
    }
    case 3:                                                                // ship: hull+cabin
      return ly >= 0.45f || (std::abs(lx - 0.5f) <= 0.30f && ly >= 0.10f);
    case 4: return std::abs(lx - 0.5f) <= 0.25f + 0.25f * ly;              // boat: trapezoid
    case 5: return std::abs(lx - 0.5f) <= 0.20f + 0.30f * ly;              // vessel: trapezoid
    default: {                                                             // kayak: ellipse
      float dx = (lx - 0.5f) / 0.5f, dy = (ly - 0.5f) / 0.5f;
      return dx * dx + dy * dy <= 1.0f;
    }
  }
}

struct Target {
  int cls = 0;
  float depth = 0;     // bottom-center camera-frame Z
  float u0 = 0, v0 = 0;  // bottom-center pixel
  float pw = 0, ph = 0;  // pixel extent
  float velocity = 0;
  GtBox box;           // painted-pixel bounding box
};

float overlap_iou(const GtBox& a, const GtBox& b) {
  float ix = std::max(0.0f, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  float iy = std::max(0.0f, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  float inter = ix * iy;
  float ua = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
  return ua > 0 ? inter / ua : 0.0f;
}

// Camera-frame position of pixel (u,v) at depth z.
std::array<float, 3> unproject(const Calibration& c, float u, float v, float z) {
  return {(u - c.cx) * z / c.fx, (v - c.cy) * z / c.fy, z};
}

RadarPoint to_radar_frame(const Calibration& c, const std::array<float, 3>& cam, float vel,
                          float power) {
  // extrinsic is radar->camera [R|t]; invert the rigid transform.
  const auto& e = c.extrinsic;
  float px = cam[0] - e[3], py = cam[1] - e[7], pz = cam[2] - e[11];
  RadarPoint p;
  p.x = e[0] * px + e[4] * py + e[8] * pz;
  p.y = e[1] * px + e[5] * py + e[9] * pz;
  p.z = e[2] * px + e[6] * py + e[10] * pz;
  p.velocity = vel;
  p.power = power;
  return p;
}

void write_all(std::vector<float>& img, int size, int x0, int y0, int x1, int y1,
               const float* rgb) {
  size_t hw = static_cast<size_t>(size) * size;
  for (int y = std::max(0, y0); y < std::min(size, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(size, x1); ++x) {
      size_t at = static_cast<size_t>(y) * size + x;
      img[at] = rgb[0];
      img[hw + at] = rgb[1];
      img[2 * hw + at] = rgb[2];
    }
}

}  // namespace

Degradation degradation_from_name(const std::string& name) {
  if (name == "none") return Degradation::kNone;
  if (name == "dark") return Degradation::kDark;
  if (name == "fog") return Degradation::kFog;
  if (name == "droplet") return Degradation::kDroplet;
  throw std::invalid_argument("unknown degradation: " + name);
}

std::string degradation_name(Degradation d) {
  switch (d) {
    case Degradation::kNone: return "none";
    case Degradation::kDark: return "dark";
    case Degradation::kFog: return "fog";
    default: return "droplet";
  }
}

Calibration scene_calibration(int image_size) {
  Calibration c;
  c.width = image_size;
  c.height = image_size;
  float f = image_size / 2.0f;
  c.fx = f;
  c.fy = f;
  c.cx = image_size / 2.0f;
  c.cy = image_size / 2.0f;
  // Radar sits 10 cm above and 5 cm right of the camera, axes aligned.
  c.extrinsic = {1, 0, 0, 0.05f, 0, 1, 0, -0.10f, 0, 0, 1, 0, 0, 0, 0, 1};
  return c;
}

Sample generate_sample(const SceneSpec& spec, int index) {
  const int S = spec.image_size;
  const Calibration calib = scene_calibration(S);
  Rng rng(splitmix64(spec.seed) ^ splitmix64(0xA5C3u + static_cast<uint64_t>(index)));

  Sample s;
  s.image_size = S;
  size_t hw = static_cast<size_t>(S) * S;
  s.image.assign(3 * hw, 0.0f);
  s.seg_a.assign(hw, static_cast<uint8_t>(kBackgroundClass));
  s.seg_b.assign(hw, 0);

  // Horizon row, snapped to the stride-4 grid; the waterline band occupies
  // [h-8, h+4) and the drivable water starts at h+4.
  int h = 4 * static_cast<int>(rng.uniform_int(spec.horizon_min / 4, spec.horizon_max / 4));
  int band_top = h - 8, band_bot = h + 4;

  // --- background ---
  for (int y = 0; y < S; ++y)
    for (int x = 0; x < S; ++x) {
      size_t at = static_cast<size_t>(y) * S + x;
      float r, g, b;
      if (y < band_top) {  // sky gradient
        float t = static_cast<float>(y) / std::max(1, band_top);
        r = 0.55f + 0.20f * t;
        g = 0.70f + 0.15f * t;
        b = 0.90f + 0.05f * t;
      } else if (y < band_bot) {  // shore band
        float n = 0.04f * std::sin(0.9f * static_cast<float>(x));
        r = 0.80f + n;
        g = 0.74f + n;
        b = 0.58f + n;
        s.seg_b[at] = 1;
      } else {  // water with ripple stripes
        float rip = 0.05f * std::sin(2.0f * static_cast<float>(M_PI) * y / 8.0f) +
                    0.03f * std::sin(2.0f * static_cast<float>(M_PI) * x / 16.0f);
        r = 0.10f + rip;
        g = 0.30f + rip;
        b = 0.55f + rip;
        s.seg_a[at] = static_cast<uint8_t>(kDrivableClass);
      }
      s.image[at] = r;
      s.image[hw + at] = g;
      s.image[2 * hw + at] = b;
    }

  // --- targets ---
  int want = static_cast<int>(rng.uniform_int(spec.min_targets, spec.max_targets));
  std::vector<Target> targets;
  for (int t = 0; t < want; ++t) {
    for (int attempt = 0; attempt < 30; ++attempt) {
      Target tg;
      tg.cls = static_cast<int>(rng.uniform_int(0, 6));
      tg.depth = static_cast<float>(rng.uniform(kDepthMin[tg.cls], kDepthMax[tg.cls]));
      tg.velocity = static_cast<float>(rng.uniform(-5.0, 5.0));
      tg.pw = calib.fx * kDimsW[tg.cls] / tg.depth;
      tg.ph = calib.fy * kDimsH[tg.cls] / tg.depth;
      // bottom row where the target meets the water at its depth
      tg.v0 = static_cast<float>(h) + calib.fy * kCameraHeight / tg.depth;
      tg.u0 = static_cast<float>(rng.uniform(0.15 * S, 0.85 * S));
      GtBox box{tg.u0 - tg.pw / 2, tg.v0 - tg.ph, tg.u0 + tg.pw / 2, tg.v0, tg.cls};
      if (box.x1 < 1 || box.x2 > S - 2 || box.y1 < 1 || box.y2 > S - 2) continue;
      bool clash = false;
      for (const Target& other : targets)
        if (overlap_iou(box, other.box) > 0.05f) clash = true;
      if (clash) continue;
      tg.box = box;
      targets.push_back(tg);
      break;
    }
  }
  // Painter's order: far to near, so closer targets occlude.
  std::sort(targets.begin(), targets.end(),
            [](const Target& a, const Target& b) { return a.depth > b.depth; });

  for (Target& tg : targets) {
    int x0 = static_cast<int>(std::floor(tg.box.x1)), x1 = static_cast<int>(std::ceil(tg.box.x2));
    int y0 = static_cast<int>(std::floor(tg.box.y1)), y1 = static_cast<int>(std::ceil(tg.box.y2));
    float minx = 1e9f, miny = 1e9f, maxx = -1e9f, maxy = -1e9f;
    for (int y = std::max(0, y0); y <= std::min(S - 1, y1); ++y)
      for (int x = std::max(0, x0); x <= std::min(S - 1, x1); ++x) {
        float lx = (static_cast<float>(x) + 0.5f - (tg.u0 - tg.pw / 2)) / tg.pw;
        float ly = (static_cast<float>(y) + 0.5f - (tg.v0 - tg.ph)) / tg.ph;
        if (lx < 0 || lx > 1 || ly < 0 || ly > 1 || !inside_shape(tg.cls, lx, ly)) continue;
        size_t at = static_cast<size_t>(y) * S + x;
        s.image[at] = kColors[tg.cls][0];
        s.image[hw + at] = kColors[tg.cls][1];
        s.image[2 * hw + at] = kColors[tg.cls][2];
        s.seg_a[at] = static_cast<uint8_t>(tg.cls);
        minx = std::min(minx, static_cast<float>(x));
        maxx = std::max(maxx, static_cast<float>(x));
        miny = std::min(miny, static_cast<float>(y));
        maxy = std::max(maxy, static_cast<float>(y));
      }
    if (maxx < minx) continue;  // fully occluded or clipped away
    // Tight box over the painted silhouette (pixel centers +/- half pixel).
    tg.box = GtBox{minx, miny, maxx + 1.0f, maxy + 1.0f, tg.cls};
    s.boxes.push_back(tg.box);
  }

  // --- radar ---
  for (const Target& tg : targets) {
    bool kept = false;
    for (const GtBox& b : s.boxes)
      if (b.cls == tg.cls && std::abs(b.x1 - tg.box.x1) < 1e-6f &&
          std::abs(b.y1 - tg.box.y1) < 1e-6f)
        kept = true;
    if (!kept) continue;
    float area = (tg.box.x2 - tg.box.x1) * (tg.box.y2 - tg.box.y1);
    int extra = std::clamp(static_cast<int>(area / 300.0f), 0, 24);
    // Returns never land inside another target's box: the smallest-box rule in
    // annotate_points then keeps every box's member set single-velocity, so
    // the median test can never disown a target's own returns.
    auto inside_other = [&](float u, float v) {
      for (const GtBox& b : s.boxes) {
        if (std::abs(b.x1 - tg.box.x1) < 1e-6f && std::abs(b.y1 - tg.box.y1) < 1e-6f &&
            std::abs(b.x2 - tg.box.x2) < 1e-6f && std::abs(b.y2 - tg.box.y2) < 1e-6f)
          continue;
        if (u >= b.x1 - 1 && u <= b.x2 + 1 && v >= b.y1 - 1 && v <= b.y2 + 1) return true;
      }
      return false;
    };
    // Guaranteed return at the silhouette center, exact depth (keeps the
    // "every boxed target carries at least one labeled point" rule). If a
    // smaller overlapping box covers the center, move onto open silhouette.
    float cu = 0.5f * (tg.box.x1 + tg.box.x2), cv = 0.5f * (tg.box.y1 + tg.box.y2);
    if (inside_other(cu, cv)) {
      for (int tries = 0; tries < 40; ++tries) {
        float u = static_cast<float>(rng.uniform(tg.box.x1, tg.box.x2));
        float v = static_cast<float>(rng.uniform(tg.box.y1, tg.box.y2));
        float lx = (u - (tg.u0 - tg.pw / 2)) / tg.pw;
        float ly = (v - (tg.v0 - tg.ph)) / tg.ph;
        if (lx >= 0 && lx <= 1 && ly >= 0 && ly <= 1 && inside_shape(tg.cls, lx, ly) &&
            !inside_other(u, v)) {
          cu = u;
          cv = v;
          break;
        }
      }
    }
    float power = kPowerScale / (tg.depth * tg.depth);
    s.points.push_back(
        to_radar_frame(calib, unproject(calib, cu, cv, tg.depth), tg.velocity, power));
    for (int i = 0; i < extra; ++i) {
      float u = 0, v = 0;
      bool ok = false;
      for (int tries = 0; tries < 20 && !ok; ++tries) {
        u = static_cast<float>(rng.uniform(tg.box.x1 + 0.1 * tg.pw, tg.box.x2 - 0.1 * tg.pw));
        v = static_cast<float>(rng.uniform(tg.box.y1 + 0.1 * tg.ph, tg.box.y2 - 0.1 * tg.ph));
        float lx = (u - (tg.u0 - tg.pw / 2)) / tg.pw;
        float ly = (v - (tg.v0 - tg.ph)) / tg.ph;
        ok = lx >= 0 && lx <= 1 && ly >= 0 && ly <= 1 && inside_shape(tg.cls, lx, ly) &&
             !inside_other(u, v);
      }
      if (!ok) continue;
      float depth = tg.depth + static_cast<float>(rng.normal(0.0, 0.5));
      depth = std::max(1.0f, depth);
      float jitter = static_cast<float>(rng.uniform(0.95, 1.05));
      float p = jitter * kPowerScale / (depth * depth);
      s.points.push_back(to_radar_frame(calib, unproject(calib, u, v, depth), tg.velocity, p));
    }
  }
  int n_clutter = static_cast<int>(
      rng.uniform_int(0, std::max(1, static_cast<int>(2 * spec.clutter_rate))));
  for (int i = 0; i < n_clutter; ++i) {
    // Clutter returns come from open water: a pixel inside a target box would
    // be occluded by the target, and would also drag that box's velocity
    // median away from the target's own returns.
    float u = 0, v = 0;
    bool open = false;
    for (int tries = 0; tries < 20 && !open; ++tries) {
      v = static_cast<float>(rng.uniform(band_bot + 4, S - 2));
      u = static_cast<float>(rng.uniform(2.0, S - 2.0));
      open = true;
      for (const GtBox& b : s.boxes)
        if (u >= b.x1 - 1 && u <= b.x2 + 1 && v >= b.y1 - 1 && v <= b.y2 + 1) open = false;
    }
    if (!open) continue;
    float depth = calib.fy * kCameraHeight / (v - static_cast<float>(h));
    s.points.push_back(to_radar_frame(calib, unproject(calib, u, v, depth),
                                      static_cast<float>(rng.uniform(-20.0, 20.0)),
                                      static_cast<float>(rng.uniform(0.5, 30.0))));
  }

  ProjectionResult proj = project_points(s.points, calib);
  s.rvp = rasterize_rvp(proj, s.points, calib, spec.bounds, S);
  s.point_labels = annotate_points(s.points, proj, s.boxes, spec.velocity_eps);

  // --- visual degradation (separate stream; radar and labels untouched) ---
  Rng drng(splitmix64(spec.seed) ^ splitmix64(0xD00Du + static_cast<uint64_t>(index)));
  switch (spec.degradation) {
    case Degradation::kNone: break;
    case Degradation::kDark:
      for (float& v : s.image) v *= 0.15f;
      break;
    case Degradation::kFog:
      for (float& v : s.image) v = 0.35f * v + 0.65f * 0.92f;
      break;
    case Degradation::kDroplet:
      for (int d = 0; d < 6; ++d) {
        float cx = static_cast<float>(drng.uniform(20.0, S - 20.0));
        float cy = static_cast<float>(drng.uniform(20.0, S - 20.0));
        float rx = static_cast<float>(drng.uniform(12.0, 35.0));
        float ry = static_cast<float>(drng.uniform(10.0, 28.0));
        float shade = 0.60f + static_cast<float>(drng.uniform(0.0, 0.15));
        float rgb[3] = {shade, shade, shade + 0.03f};
        for (int y = std::max(0, static_cast<int>(cy - ry));
             y <= std::min(S - 1, static_cast<int>(cy + ry)); ++y)
          for (int x = std::max(0, static_cast<int>(cx - rx));
               x <= std::min(S - 1, static_cast<int>(cx + rx)); ++x) {
            float dx = (static_cast<float>(x) - cx) / rx;
            float dy = (static_cast<float>(y) - cy) / ry;
            if (dx * dx + dy * dy > 1.0f) continue;
            size_t at = static_cast<size_t>(y) * S + x;
            s.image[at] = rgb[0];
            s.image[hw + at] = rgb[1];
            s.image[2 * hw + at] = rgb[2];
          }
      }
      break;
  }

  // Snap to the 8-bit grid so the PPM round-trip is bit-exact.
  for (float& v : s.image)
    v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
  return s;
}

// ---- image I/O ----

void save_ppm(const std::string& path, const std::vector<float>& chw, int size) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write image: " + path);
  f << "P6\n" << size << ' ' << size << "\n255\n";
  size_t hw = static_cast<size_t>(size) * size;
  std::vector<uint8_t> row(3 * static_cast<size_t>(size));
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) {
        float v = chw[static_cast<size_t>(c) * hw + static_cast<size_t>(y) * size + x];
        row[3 * static_cast<size_t>(x) + c] =
            static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
      }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

namespace {

void read_pnm_header(std::ifstream& f, const std::string& path, const char* magic, int* w,
                     int* h) {
  std::string m;
  f >> m;
  if (m != magic) throw std::runtime_error("bad magic in " + path);
  int maxval = 0;
  f >> *w >> *h >> maxval;
  if (!f || *w <= 0 || *h <= 0 || maxval != 255)
    throw std::runtime_error("bad header in " + path);
  f.get();  // single whitespace before binary payload
}

}  // namespace

std::vector<float> load_ppm(const std::string& path, int* size_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read image: " + path);
  int w = 0, h = 0;
  read_pnm_header(f, path, "P6", &w, &h);
  if (w != h) throw std::runtime_error("expected square image: " + path);
  size_t hw = static_cast<size_t>(w) * h;
  std::vector<uint8_t> raw(3 * hw);
  f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(f.gcount()) != raw.size())
    throw std::runtime_error("truncated image: " + path);
  std::vector<float> chw(3 * hw);
  for (size_t i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c)
      chw[static_cast<size_t>(c) * hw + i] = static_cast<float>(raw[3 * i + c]) / 255.0f;
  if (size_out) *size_out = w;
  return chw;
}

void save_pgm(const std::string& path, const std::vector<uint8_t>& labels, int size) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write mask: " + path);
  f << "P5\n" << size << ' ' << size << "\n255\n";
  f.write(reinterpret_cast<const char*>(labels.data()),
          static_cast<std::streamsize>(labels.size()));
}

std::vector<uint8_t> load_pgm(const std::string& path, int* size_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read mask: " + path);
  int w = 0, h = 0;
  read_pnm_header(f, path, "P5", &w, &h);
  if (w != h) throw std::runtime_error("expected square mask: " + path);
  std::vector<uint8_t> labels(static_cast<size_t>(w) * h);
  f.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (static_cast<size_t>(f.gcount()) != labels.size())
    throw std::runtime_error("truncated mask: " + path);
  if (size_out) *size_out = w;
  return labels;
}

// ---- VOC-style annotations ----

namespace {

void write_voc_xml(const std::string& path, const Sample& s) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write annotation: " + path);
  f.precision(9);
  f << "<annotation>\n  <size>\n    <width>" << s.image_size << "</width>\n    <height>"
    << s.image_size << "</height>\n  </size>\n";
  for (const GtBox& b : s.boxes) {
    f << "  <object>\n    <name>" << kClassNames[b.cls] << "</name>\n    <bndbox>\n"
      << "      <xmin>" << b.x1 << "</xmin>\n      <ymin>" << b.y1 << "</ymin>\n"
      << "      <xmax>" << b.x2 << "</xmax>\n      <ymax>" << b.y2 << "</ymax>\n"
      << "    </bndbox>\n  </object>\n";
  }
  f << "</annotation>\n";
}

std::string tag_value(const std::string& text, const std::string& tag, size_t from,
                      size_t* next) {
  std::string open = "<" + tag + ">", close = "</" + tag + ">";
  size_t a = text.find(open, from);
  if (a == std::string::npos) return "";
  size_t b = text.find(close, a);
  if (b == std::string::npos) return "";
  if (next) *next = b + close.size();
  return text.substr(a + open.size(), b - a - open.size());
}

std::vector<GtBox> read_voc_xml(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read annotation: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  std::string text = buf.str();
  std::vector<GtBox> boxes;
  size_t pos = 0;
  while (true) {
    size_t obj = text.find("<object>", pos);
    if (obj == std::string::npos) break;
    size_t next = obj;
    std::string name = tag_value(text, "name", obj, &next);
    GtBox b;
    b.cls = -1;
    for (int c = 0; c < 7; ++c)
      if (name == kClassNames[c]) b.cls = c;
    if (b.cls < 0) throw std::runtime_error("unknown class '" + name + "' in " + path);
    b.x1 = std::stof(tag_value(text, "xmin", obj, &next));
    b.y1 = std::stof(tag_value(text, "ymin", obj, &next));
    b.x2 = std::stof(tag_value(text, "xmax", obj, &next));
    b.y2 = std::stof(tag_value(text, "ymax", obj, &next));
    boxes.push_back(b);
    pos = next;
  }
  return boxes;
}

std::string sample_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

std::vector<std::string> read_id_list(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read split file: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

}  // namespace

// ---- dataset export/load ----

void export_dataset(const std::vector<Sample>& samples, const std::vector<int>& indices,
                    const SceneSpec& spec, const std::string& root) {
  if (samples.size() != indices.size())
    throw std::invalid_argument("export_dataset: samples/indices size mismatch");
  namespace fs = std::filesystem;
  for (const char* d : {"images", "rvp", "pointclouds", "annotations", "masks", "splits"})
    fs::create_directories(fs::path(root) / d);

  std::ofstream train(fs::path(root) / "splits" / "train.txt");
  std::ofstream val(fs::path(root) / "splits" / "val.txt");
  std::ofstream test(fs::path(root) / "splits" / "test.txt");
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    std::string id = sample_id(indices[i]);
    save_ppm((fs::path(root) / "images" / (id + ".ppm")).string(), s.image, s.image_size);
    TensorF rvp = TensorF::from({3, s.image_size, s.image_size},
                                std::vector<float>(s.rvp.begin(), s.rvp.end()));
    save_checkpoint((fs::path(root) / "rvp" / (id + ".achl")).string(), {{"rvp", rvp}});
    save_pointcloud((fs::path(root) / "pointclouds" / (id + ".txt")).string(), s.points);
    write_voc_xml((fs::path(root) / "annotations" / (id + ".xml")).string(), s);
    save_pgm((fs::path(root) / "masks" / (id + "_a.pgm")).string(), s.seg_a, s.image_size);
    save_pgm((fs::path(root) / "masks" / (id + "_b.pgm")).string(), s.seg_b, s.image_size);
    // 7:2:1 split by index residue.
    int r = indices[i] % 10;
    (r < 7 ? train : r < 9 ? val : test) << id << '\n';
  }
  save_calibration((fs::path(root) / "calibration.txt").string(),
                   scene_calibration(spec.image_size));
  std::ofstream meta(fs::path(root) / "meta.txt");
  meta.precision(9);
  meta << "image_size " << spec.image_size << "\nvelocity_eps " << spec.velocity_eps
       << "\nr_max " << spec.bounds.r_max << "\nv_min " << spec.bounds.v_min << "\nv_max "
       << spec.bounds.v_max << "\np_min " << spec.bounds.p_min << "\np_max "
       << spec.bounds.p_max << '\n';
}

DatasetHandle load_dataset(const std::string& root) {
  namespace fs = std::filesystem;
  DatasetHandle ds;
  ds.root = root;
  ds.train_ids = read_id_list((fs::path(root) / "splits" / "train.txt").string());
  ds.val_ids = read_id_list((fs::path(root) / "splits" / "val.txt").string());
  ds.test_ids = read_id_list((fs::path(root) / "splits" / "test.txt").string());
  ds.calib = load_calibration((fs::path(root) / "calibration.txt").string());
  std::ifstream meta(fs::path(root) / "meta.txt");
  if (!meta) throw std::runtime_error("cannot read dataset meta: " + root + "/meta.txt");
  std::string key;
  float value;
  while (meta >> key >> value) {
    if (key == "image_size") ds.image_size = static_cast<int>(value);
    if (key == "velocity_eps") ds.velocity_eps = value;
    if (key == "r_max") ds.bounds.r_max = value;
    if (key == "v_min") ds.bounds.v_min = value;
    if (key == "v_max") ds.bounds.v_max = value;
    if (key == "p_min") ds.bounds.p_min = value;
    if (key == "p_max") ds.bounds.p_max = value;
  }
  return ds;
}

Sample load_sample(const DatasetHandle& ds, const std::string& id) {
  namespace fs = std::filesystem;
  Sample s;
  int size = 0;
  s.image = load_ppm((fs::path(ds.root) / "images" / (id + ".ppm")).string(), &size);
  s.image_size = size;
  auto rvp = load_checkpoint_map((fs::path(ds.root) / "rvp" / (id + ".achl")).string());
  if (!rvp.count("rvp"))
    throw std::runtime_error("rvp tensor missing in " + ds.root + "/rvp/" + id + ".achl");
  const auto& data = rvp.at("rvp").data();
  s.rvp.assign(data.begin(), data.end());
  s.points = load_pointcloud((fs::path(ds.root) / "pointclouds" / (id + ".txt")).string());
  s.boxes = read_voc_xml((fs::path(ds.root) / "annotations" / (id + ".xml")).string());
  s.seg_a = load_pgm((fs::path(ds.root) / "masks" / (id + "_a.pgm")).string(), &size);
  s.seg_b = load_pgm((fs::path(ds.root) / "masks" / (id + "_b.pgm")).string(), &size);
  ProjectionResult proj = project_points(s.points, ds.calib);
  s.point_labels = annotate_points(s.points, proj, s.boxes, ds.velocity_eps);
  return s;
}

}  // namespace ach
