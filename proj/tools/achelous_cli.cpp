// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: dataset synthesis, training, evaluation, inference
// overlays, and the latency benchmark.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ach/data/radar_geom.hpp"
#include "ach/data/synth.hpp"
#include "ach/eval/bench.hpp"
#include "ach/eval/evaluate.hpp"
#include "ach/model/achelous.hpp"
#include "ach/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Thrown for bad configuration (exit 2); other exceptions exit 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kKnownKeys = {
    "size",      "neck",    "fusion",  "radar_conv", "radar",   "epochs",
    "lr0",       "batch",   "seed",    "data_root",  "out_dir", "image_size",
    "split",     "checkpoint", "predictions", "max_train_samples", "count",
    "degradation", "sizes", "runs",    "warmups",    "id"};

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::istringstream ss(line);
    std::string key, value;
    if (!(ss >> key)) continue;
    if (!(ss >> value)) throw ConfigError("config key without value: " + key);
    if (!kKnownKeys.count(key)) throw ConfigError("unknown config key: " + key);
    kv[key] = value;
  }
  return kv;
}

std::string get(const std::map<std::string, std::string>& kv, const std::string& key,
                const std::string& fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::string require(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError("config is missing required key: " + key);
  return it->second;
}

int to_int(const std::string& v, const std::string& key) {
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer: " + v);
  }
}

float to_float(const std::string& v, const std::string& key) {
  try {
    return std::stof(v);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + v);
  }
}

ach::ModelConfig model_config_from(const std::map<std::string, std::string>& kv) {
  ach::ModelConfig cfg;
  try {
    cfg = ach::ModelConfig::for_size(get(kv, "size", "s0"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::string neck = get(kv, "neck", "ghost");
  if (neck == "ghost")
    cfg.neck = ach::NeckVariant::kGhost;
  else if (neck == "csp")
    cfg.neck = ach::NeckVariant::kCsp;
  else
    throw ConfigError("unknown neck (want ghost|csp): " + neck);
  std::string fusion = get(kv, "fusion", "fpn");
  if (fusion == "fpn")
    cfg.fusion = ach::FusionMode::kFpn;
  else if (fusion == "backbone_fpn")
    cfg.fusion = ach::FusionMode::kBackboneFpn;
  else
    throw ConfigError("unknown fusion (want fpn|backbone_fpn): " + fusion);
  std::string rc = get(kv, "radar_conv", "deform");
  if (rc == "deform")
    cfg.radar_deform = true;
  else if (rc == "plain")
    cfg.radar_deform = false;
  else
    throw ConfigError("unknown radar_conv (want deform|plain): " + rc);
  std::string radar = get(kv, "radar", "on");
  if (radar == "on")
    cfg.radar_enabled = true;
  else if (radar == "off")
    cfg.radar_enabled = false;
  else
    throw ConfigError("unknown radar (want on|off): " + radar);
  cfg.image_size = to_int(get(kv, "image_size", "320"), "image_size");
  if (cfg.image_size % 32 != 0 || cfg.image_size <= 0)
    throw ConfigError("image_size must be a positive multiple of 32");
  return cfg;
}

std::vector<ach::Sample> load_split(const ach::DatasetHandle& ds, const std::string& split,
                                    size_t limit) {
  const std::vector<std::string>* ids = nullptr;
  if (split == "train")
    ids = &ds.train_ids;
  else if (split == "val")
    ids = &ds.val_ids;
  else if (split == "test")
    ids = &ds.test_ids;
  else
    throw ConfigError("unknown split (want train|val|test): " + split);
  std::vector<ach::Sample> out;
  for (const std::string& id : *ids) {
    if (out.size() >= limit) break;
    out.push_back(load_sample(ds, id));
  }
  return out;
}

json metrics_json(const ach::EvalResult& r) {
  json j;
  j["det"]["mAP_50_95"] = r.det.map_50_95;
  j["det"]["mAP_50"] = r.det.map_50;
  j["det"]["AR_50_95"] = r.det.ar_50_95;
  j["det"]["per_class_ap"] = r.det.per_class_ap;
  j["seg"]["mIoU_targets"] = r.miou_targets;
  j["seg"]["mIoU_drivable"] = r.miou_drivable;
  j["seg"]["mIoU_waterline"] = r.miou_waterline;
  j["seg"]["per_class_iou"] = r.seg_a.per_class;
  j["pointcloud"]["mIoU"] = r.pc.mean;
  j["pointcloud"]["accuracy"] = r.pc_accuracy;
  return j;
}

// ---- inference overlays ----

constexpr float kPalette[9][3] = {{0.45f, 0.30f, 0.15f}, {0.90f, 0.20f, 0.10f},
                                  {0.95f, 0.80f, 0.15f}, {0.50f, 0.50f, 0.58f},
                                  {0.88f, 0.88f, 0.82f}, {0.15f, 0.42f, 0.22f},
                                  {0.55f, 0.20f, 0.62f}, {0.10f, 0.60f, 0.90f},
                                  {0.00f, 0.00f, 0.00f}};

void put_pixel(std::vector<float>& img, int S, int x, int y, const float* rgb, float a = 1.0f) {
  if (x < 0 || y < 0 || x >= S || y >= S) return;
  size_t hw = static_cast<size_t>(S) * S, at = static_cast<size_t>(y) * S + x;
  for (int c = 0; c < 3; ++c)
    img[c * hw + at] = (1.0f - a) * img[c * hw + at] + a * rgb[c];
}

void draw_box(std::vector<float>& img, int S, const ach::DetBox& b) {
  const float* rgb = kPalette[b.cls];
  for (int x = static_cast<int>(b.x1); x <= static_cast<int>(b.x2); ++x) {
    put_pixel(img, S, x, static_cast<int>(b.y1), rgb);
    put_pixel(img, S, x, static_cast<int>(b.y2), rgb);
  }
  for (int y = static_cast<int>(b.y1); y <= static_cast<int>(b.y2); ++y) {
    put_pixel(img, S, static_cast<int>(b.x1), y, rgb);
    put_pixel(img, S, static_cast<int>(b.x2), y, rgb);
  }
}

void run_infer(const std::map<std::string, std::string>& kv) {
  ach::DatasetHandle ds = ach::load_dataset(require(kv, "data_root"));
  std::string id = require(kv, "id");
  std::string out_dir = require(kv, "out_dir");
  fs::create_directories(out_dir);
  ach::Sample s = ach::load_sample(ds, id);

  ach::ModelConfig cfg = model_config_from(kv);
  ach::Achelous<float> model(cfg, 1);
  ach::load_model_weights(model, require(kv, "checkpoint"));

  std::vector<const ach::Sample*> one{&s};
  ach::Batch b = ach::make_batch(one);
  ach::NoGradGuard guard;
  ach::ModelOutputs<float> out = model.forward(b.image, b.rvp, b.points, b.mask);
  const int S = s.image_size;
  size_t hw = static_cast<size_t>(S) * S;

  auto boxes = ach::nms(ach::decode_boxes(out.det, S, 0.35f)[0], 0.65f);
  std::vector<float> det_panel = s.image;
  for (const ach::DetBox& box : boxes) draw_box(det_panel, S, box);
  ach::save_ppm((fs::path(out_dir) / (id + "_det.ppm")).string(), det_panel, S);

  auto overlay = [&](const ach::TensorF& maps, int skip_class, const std::string& name) {
    std::vector<float> panel = s.image;
    const int C = static_cast<int>(maps.dim(1));
    for (size_t i = 0; i < hw; ++i) {
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (maps.data()[c * hw + i] > maps.data()[best * hw + i]) best = c;
      if (best == skip_class) continue;
      put_pixel(panel, S, static_cast<int>(i % S), static_cast<int>(i / S),
                kPalette[best % 9], 0.5f);
    }
    ach::save_ppm((fs::path(out_dir) / (id + "_" + name + ".ppm")).string(), panel, S);
  };
  overlay(out.seg_a, ach::kBackgroundClass, "seg_targets");

  // Drivable panel: only the drivable class, as its own mask.
  {
    std::vector<float> panel = s.image;
    const int C = ach::kSegClassesA;
    for (size_t i = 0; i < hw; ++i) {
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (out.seg_a.data()[c * hw + i] > out.seg_a.data()[best * hw + i]) best = c;
      if (best == ach::kDrivableClass) put_pixel(panel, S, static_cast<int>(i % S),
                                                 static_cast<int>(i / S), kPalette[7], 0.5f);
    }
    ach::save_ppm((fs::path(out_dir) / (id + "_drivable.ppm")).string(), panel, S);
  }
  {
    std::vector<float> panel = s.image;
    for (size_t i = 0; i < hw; ++i)
      if (out.seg_b.data()[hw + i] > out.seg_b.data()[i])
        put_pixel(panel, S, static_cast<int>(i % S), static_cast<int>(i / S), kPalette[1],
                  0.6f);
    ach::save_ppm((fs::path(out_dir) / (id + "_waterline.ppm")).string(), panel, S);
  }
  {
    std::vector<float> panel = s.image;
    for (float& v : panel) v *= 0.55f;
    ach::ProjectionResult proj = ach::project_points(s.points, ds.calib);
    const int64_t C = out.pc_logits.dim(2);
    for (const ach::ProjectedPoint& p : proj.points) {
      const float* row = out.pc_logits.data().data() + p.index * C;
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (row[c] > row[best]) best = c;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          put_pixel(panel, S, static_cast<int>(p.u) + dx, static_cast<int>(p.v) + dy,
                    kPalette[best % 9]);
    }
    ach::save_ppm((fs::path(out_dir) / (id + "_points.ppm")).string(), panel, S);
  }
  std::cout << "wrote 5 panels for sample " << id << " to " << out_dir << "\n";
}

void run_synth(uint64_t seed, int count, const std::string& out,
               const std::string& degradation) {
  if (count <= 0) throw ConfigError("synth: count must be positive");
  if (out.empty()) throw ConfigError("synth: --out is required");
  ach::SceneSpec spec;
  spec.seed = seed;
  spec.degradation = [&] {
    try {
      return ach::degradation_from_name(degradation);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  std::vector<ach::Sample> samples;
  std::vector<int> indices;
  for (int i = 0; i < count; ++i) {
    samples.push_back(ach::generate_sample(spec, i));
    indices.push_back(i);
  }
  ach::export_dataset(samples, indices, spec, out);
  std::cout << "wrote " << count << " samples to " << out << "\n";
}

void run_train(const std::map<std::string, std::string>& kv) {
  ach::DatasetHandle ds = ach::load_dataset(require(kv, "data_root"));
  size_t cap = static_cast<size_t>(to_int(get(kv, "max_train_samples", "384"),
                                          "max_train_samples"));
  std::vector<ach::Sample> samples = load_split(ds, "train", cap);
  if (samples.empty()) throw ConfigError("training split is empty");

  std::map<std::string, std::string> mk = kv;
  mk["image_size"] = std::to_string(ds.image_size);
  ach::ModelConfig mcfg = model_config_from(mk);

  ach::TrainConfig tcfg;
  tcfg.epochs = to_int(get(kv, "epochs", "100"), "epochs");
  tcfg.batch = to_int(get(kv, "batch", "32"), "batch");
  tcfg.lr0 = to_float(get(kv, "lr0", "0.03"), "lr0");
  tcfg.seed = static_cast<uint64_t>(to_int(get(kv, "seed", "1"), "seed"));
  tcfg.out_dir = require(kv, "out_dir");
  if (tcfg.epochs <= 0 || tcfg.batch <= 0 || tcfg.lr0 <= 0)
    throw ConfigError("epochs, batch and lr0 must be positive");

  ach::Achelous<float> model(mcfg, tcfg.seed);
  ach::Trainer trainer(model, tcfg);
  std::vector<ach::StepStats> hist = trainer.fit(samples);
  std::ofstream used(fs::path(tcfg.out_dir) / "config_used.txt");
  for (const auto& [k, v] : kv) used << k << ' ' << v << '\n';
  std::cout << "trained " << hist.size() << " steps on " << samples.size()
            << " samples; final total loss " << hist.back().total << "; checkpoint at "
            << (fs::path(tcfg.out_dir) / "model_final.achl").string() << "\n";
}

void run_eval(const std::map<std::string, std::string>& kv) {
  ach::DatasetHandle ds = ach::load_dataset(require(kv, "data_root"));
  std::string split = get(kv, "split", "val");
  std::vector<ach::Sample> samples = load_split(ds, split, SIZE_MAX);
  if (samples.empty()) throw ConfigError("split " + split + " is empty");

  ach::EvalResult result;
  if (kv.count("predictions")) {
    // Score externally produced detections (JSON list per sample id).
    std::ifstream f(kv.at("predictions"));
    if (!f) throw ConfigError("cannot open predictions file: " + kv.at("predictions"));
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) throw ConfigError("predictions file is not valid JSON");
    std::map<std::string, std::vector<ach::DetBox>> by_id;
    for (const auto& entry : j) {
      std::vector<ach::DetBox> boxes;
      for (const auto& b : entry.at("boxes"))
        boxes.push_back({b.at("x1").get<float>(), b.at("y1").get<float>(),
                         b.at("x2").get<float>(), b.at("y2").get<float>(),
                         b.at("cls").get<int>(), b.at("score").get<float>()});
      by_id[entry.at("id").get<std::string>()] = std::move(boxes);
    }
    const std::vector<std::string>& ids =
        split == "train" ? ds.train_ids : split == "val" ? ds.val_ids : ds.test_ids;
    std::vector<std::vector<ach::DetBox>> preds;
    std::vector<std::vector<ach::GtBox>> gts;
    for (size_t i = 0; i < samples.size(); ++i) {
      auto it = by_id.find(ids[i]);
      preds.push_back(it == by_id.end() ? std::vector<ach::DetBox>{} : it->second);
      gts.push_back(samples[i].boxes);
    }
    result.det = ach::compute_map(preds, gts);
  } else {
    std::map<std::string, std::string> mk = kv;
    mk["image_size"] = std::to_string(ds.image_size);
    ach::ModelConfig mcfg = model_config_from(mk);
    ach::Achelous<float> model(mcfg, 1);
    ach::load_model_weights(model, require(kv, "checkpoint"));
    ach::EvalOptions opt;
    opt.batch = to_int(get(kv, "batch", "8"), "batch");
    result = evaluate_model(model, samples, opt);
  }

  json j = metrics_json(result);
  j["split"] = split;
  j["samples"] = samples.size();
  std::cout << j.dump(2) << "\n";
  std::string out_dir = get(kv, "out_dir", "");
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "metrics.json");
    f << j.dump(2) << "\n";
  }
}

void run_bench(const std::map<std::string, std::string>& kv) {
  std::string sizes = get(kv, "sizes", get(kv, "size", "s0"));
  int runs = to_int(get(kv, "runs", "100"), "runs");
  int warmups = to_int(get(kv, "warmups", "10"), "warmups");
  if (runs <= 0) throw ConfigError("runs must be positive");
  std::string out_dir = get(kv, "out_dir", ".");
  fs::create_directories(out_dir);

  std::vector<ach::BenchReport> reports;
  std::stringstream list(sizes);
  std::string tag;
  while (std::getline(list, tag, ',')) {
    std::map<std::string, std::string> mk = kv;
    mk["size"] = tag;
    mk.erase("sizes");
    reports.push_back(ach::benchmark_model(model_config_from(mk), runs, warmups));
  }
  if (reports.empty()) throw ConfigError("no sizes given");

  write_bench_csv(reports, (fs::path(out_dir) / "bench.csv").string());
  write_bench_svg(reports, (fs::path(out_dir) / "bench.svg").string());
  json j = json::array();
  for (const ach::BenchReport& r : reports) {
    json row;
    row["config"] = r.config;
    row["unified_ms"] = r.unified_ms;
    row["sum_standalone_ms"] = r.sum_standalone_ms;
    row["max_standalone_ms"] = r.max_standalone_ms;
    for (const ach::BenchRow& br : r.rows)
      row["tasks"][br.name] = {{"mean_ms", br.mean_ms},
                               {"stddev_ms", br.stddev_ms},
                               {"stable", br.stable},
                               {"params", br.params},
                               {"gmacs", br.gmacs}};
    j.push_back(row);
  }
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Achelous water-surface multi-task perception"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  uint64_t s_seed = 1;
  int s_count = 100;
  std::string s_out, s_deg = "none";
  synth->add_option("--seed", s_seed, "generator seed");
  synth->add_option("--count", s_count, "number of samples");
  synth->add_option("--out", s_out, "output dataset root")->required();
  synth->add_option("--degradation", s_deg, "none|dark|fog|droplet");

  // config-file subcommands with a few common overrides
  std::string config_path;
  std::map<std::string, std::string> overrides;
  auto add_config_cmd = [&](const char* name, const char* desc, bool config_required) {
    auto* cmd = app.add_subcommand(name, desc);
    auto* opt = cmd->add_option("--config", config_path, "flat key-value config file");
    if (config_required) opt->required();
    for (const char* key : {"data_root", "out_dir", "size", "neck", "fusion", "radar_conv",
                            "radar", "split", "checkpoint", "predictions", "id", "sizes"})
      cmd->add_option_function<std::string>(
          std::string("--") + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
          key);
    for (const char* key : {"epochs", "batch", "seed", "max_train_samples", "runs",
                            "warmups", "image_size"})
      cmd->add_option_function<int>(
          std::string("--") + key,
          [&overrides, key](int v) { overrides[key] = std::to_string(v); }, key);
    cmd->add_option_function<float>(
        "--lr0", [&overrides](float v) { overrides["lr0"] = std::to_string(v); }, "lr0");
    return cmd;
  };
  auto* train = add_config_cmd("train", "train a model from a config file", true);
  auto* eval = add_config_cmd("eval", "evaluate a checkpoint or predictions file", false);
  auto* infer = add_config_cmd("infer", "write per-task overlay panels for one sample", false);
  auto* bench = add_config_cmd("bench", "unified vs standalone latency benchmark", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) {
      run_synth(s_seed, s_count, s_out, s_deg);
      return 0;
    }
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = read_config(config_path);
    for (const auto& [k, v] : overrides) kv[k] = v;
    if (train->parsed()) run_train(kv);
    if (eval->parsed()) run_eval(kv);
    if (infer->parsed()) run_infer(kv);
    if (bench->parsed()) run_bench(kv);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
