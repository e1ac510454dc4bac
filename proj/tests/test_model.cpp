// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ach/core/macs.hpp"
#include "ach/core/rng.hpp"
#include "ach/model/achelous.hpp"

using namespace ach;

namespace {

TensorF rand_t(const Shape& shape, uint64_t seed, float lo = -1, float hi = 1) {
  Rng rng(seed);
  return TensorF::uniform(shape, lo, hi, rng);
}

bool same_data(const TensorF& a, const TensorF& b, float tol = 0) {
  if (a.shape() != b.shape()) return false;
  for (int64_t i = 0; i < a.numel(); ++i)
    if (std::abs(a.data()[i] - b.data()[i]) > tol) return false;
  return true;
}

}  // namespace

TEST_CASE("encoder pyramid strides and channels") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  cfg.image_size = 160;
  Rng rng(3);
  ParamStore<float> ps;
  ImageEncoder<float> enc(ps, "encoder", cfg, rng);
  NoGradGuard ng;
  auto pyr = enc.forward(rand_t({1, 3, 160, 160}, 5));
  CHECK(pyr.c2.shape() == Shape{1, 24, 40, 40});
  CHECK(pyr.c3.shape() == Shape{1, 48, 20, 20});
  CHECK(pyr.c4.shape() == Shape{1, 96, 10, 10});
  CHECK(pyr.c5.shape() == Shape{1, 176, 5, 5});
  // depths 2/2/6/4; in the last two stages attention takes the final slot
  auto depth = [&](int s) {
    return enc.stages[s].dw_blocks.size() + (enc.stages[s].has_attn ? 1 : 0);
  };
  CHECK(depth(0) == 2);
  CHECK(depth(1) == 2);
  CHECK(depth(2) == 6);
  CHECK(depth(3) == 4);
  CHECK(!enc.stages[0].has_attn);
  CHECK(!enc.stages[1].has_attn);
  CHECK(enc.stages[2].has_attn);
  CHECK(enc.stages[3].has_attn);
}

TEST_CASE("radar branch runs at a quarter of the encoder width") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  cfg.image_size = 160;
  Rng rng(4);
  ParamStore<float> ps;
  RcNet<float> rc(ps, "rcnet", cfg, rng);
  NoGradGuard ng;
  auto maps = rc.forward(rand_t({2, 3, 160, 160}, 6));
  CHECK(maps[0].shape() == Shape{2, 12, 20, 20});
  CHECK(maps[1].shape() == Shape{2, 24, 10, 10});
  CHECK(maps[2].shape() == Shape{2, 44, 5, 5});
}

TEST_CASE("neck emits radar-concatenated detection maps and two streams") {
  ModelConfig cfg = ModelConfig::for_size("s0");  // image_size 320
  Rng rng(7);
  Achelous<float> model(cfg, 7);
  NoGradGuard ng;
  auto pyr = model.encoder().forward(rand_t({1, 3, 320, 320}, 8));
  auto radar = model.rcnet().forward(rand_t({1, 3, 320, 320}, 9, 0, 1));
  auto out = model.neck().forward(pyr, radar);
  CHECK(out.d3.shape() == Shape{1, 76, 40, 40});   // 64 + 12
  CHECK(out.d4.shape() == Shape{1, 88, 20, 20});   // 64 + 24
  CHECK(out.d5.shape() == Shape{1, 108, 10, 10});  // 64 + 44
  CHECK(out.stream_a.shape() == Shape{1, 64, 80, 80});
  CHECK(out.stream_b.shape() == Shape{1, 64, 80, 80});
}

TEST_CASE("full forward produces every task's output at the right shape") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  cfg.image_size = 160;
  Achelous<float> model(cfg, 1);
  NoGradGuard ng;
  auto image = rand_t({2, 3, 160, 160}, 10, 0, 1);
  auto rvp = rand_t({2, 3, 160, 160}, 11, 0, 1);
  auto points = rand_t({2, 6, 5}, 12);
  auto mask = TensorF::ones({2, 6});
  auto out = model.forward(image, rvp, points, mask);
  for (int l = 0; l < 3; ++l) {
    int hw = 20 >> l;
    CHECK(out.det.cls[l].shape() == Shape{2, 7, hw, hw});
    CHECK(out.det.reg[l].shape() == Shape{2, 4, hw, hw});
    CHECK(out.det.obj[l].shape() == Shape{2, 1, hw, hw});
  }
  CHECK(out.seg_a.shape() == Shape{2, 9, 160, 160});
  CHECK(out.seg_b.shape() == Shape{2, 2, 160, 160});
  CHECK(out.pc_logits.shape() == Shape{2, 6, 8});
}

TEST_CASE("single-task forwards agree with the unified pass") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  cfg.image_size = 160;
  Achelous<float> model(cfg, 2);
  NoGradGuard ng;
  auto image = rand_t({1, 3, 160, 160}, 13, 0, 1);
  auto rvp = rand_t({1, 3, 160, 160}, 14, 0, 1);
  auto points = rand_t({1, 5, 5}, 15);
  auto mask = TensorF::ones({1, 5});
  auto uni = model.forward(image, rvp, points, mask);
  auto det = model.forward_det_only(image, rvp);
  for (int l = 0; l < 3; ++l) {
    CHECK(same_data(uni.det.cls[l], det.cls[l], 1e-5f));
    CHECK(same_data(uni.det.reg[l], det.reg[l], 1e-5f));
  }
  CHECK(same_data(uni.seg_a, model.forward_seg_a_only(image, rvp), 1e-5f));
  CHECK(same_data(uni.seg_b, model.forward_seg_b_only(image, rvp), 1e-5f));
  CHECK(same_data(uni.pc_logits, model.forward_points_only(points, mask), 1e-5f));
}

TEST_CASE("csp neck and backbone+fpn fusion variants run") {
  for (auto neck : {NeckVariant::kGhost, NeckVariant::kCsp})
    for (auto fusion : {FusionMode::kFpn, FusionMode::kBackboneFpn}) {
      ModelConfig cfg = ModelConfig::for_size("s0");
      cfg.image_size = 96;
      cfg.neck = neck;
      cfg.fusion = fusion;
      Achelous<float> model(cfg, 3);
      NoGradGuard ng;
      auto out = model.forward(rand_t({1, 3, 96, 96}, 16, 0, 1), rand_t({1, 3, 96, 96}, 17, 0, 1),
                               rand_t({1, 4, 5}, 18), TensorF::ones({1, 4}));
      CHECK(out.seg_a.shape() == Shape{1, 9, 96, 96});
      CHECK(out.det.cls[0].shape() == Shape{1, 7, 12, 12});
    }
}

TEST_CASE("backbone+fpn fusion costs more compute than fpn fusion") {
  auto run = [](FusionMode fusion) {
    ModelConfig cfg = ModelConfig::for_size("s0");
    cfg.image_size = 96;
    cfg.fusion = fusion;
    Achelous<float> model(cfg, 4);
    NoGradGuard ng;
    reset_macs();
    model.forward_det_only(rand_t({1, 3, 96, 96}, 19, 0, 1), rand_t({1, 3, 96, 96}, 20, 0, 1));
    return macs();
  };
  auto fpn = run(FusionMode::kFpn);
  auto backbone = run(FusionMode::kBackboneFpn);
  CHECK(backbone > fpn);
}

TEST_CASE("camera-only config ignores the radar tensor entirely") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  cfg.image_size = 96;
  cfg.radar_enabled = false;
  Achelous<float> model(cfg, 5);
  NoGradGuard ng;
  auto image = rand_t({1, 3, 96, 96}, 21, 0, 1);
  auto a = model.forward_det_only(image, rand_t({1, 3, 96, 96}, 22, 0, 1));
  auto b = model.forward_det_only(image, rand_t({1, 3, 96, 96}, 23, 5, 9));
  for (int l = 0; l < 3; ++l) {
    CHECK(same_data(a.cls[l], b.cls[l]));
    CHECK(same_data(a.reg[l], b.reg[l]));
    CHECK(same_data(a.obj[l], b.obj[l]));
  }
}

TEST_CASE("radar deformable conv starts as a plain conv and then departs") {
  ModelConfig a = ModelConfig::for_size("s0");
  a.image_size = 96;
  ModelConfig b = a;
  b.radar_deform = false;
  Achelous<float> ma(a, 6), mb(b, 6);
  NoGradGuard ng;
  auto rvp = rand_t({1, 3, 96, 96}, 24, 0, 1);
  // offsets are zero-initialised, so at construction both modes agree exactly
  auto xa = ma.rcnet().forward(rvp);
  auto xb = mb.rcnet().forward(rvp);
  CHECK(same_data(xa[0], xb[0], 1e-6f));
  // once offsets move, only the deformable mode reacts
  for (auto& m : {&ma, &mb})
    for (auto& [name, t] : m->params().items())
      if (name.find(".radar.offset.weight") != std::string::npos)
        std::fill(m->params().find(name)->data().begin(),
                  m->params().find(name)->data().end(), 0.05f);
  auto ya = ma.rcnet().forward(rvp);
  auto yb = mb.rcnet().forward(rvp);
  CHECK(!same_data(ya[0], xa[0], 1e-6f));
  CHECK(same_data(yb[0], xb[0], 1e-6f));
}

TEST_CASE("classification and objectness biases start at the focal prior") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> model(cfg, 8);
  float prior = -std::log(99.0f);
  for (const char* name : {"det_head.cls_out.bias", "det_head.obj_out.bias"}) {
    const TensorF* b = model.params().find(name);
    REQUIRE(b != nullptr);
    for (float v : b->data()) CHECK(v == doctest::Approx(prior).epsilon(1e-6));
  }
}

TEST_CASE("depthwise-separable head branches beat dense 3x3 convs by 3x") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> model(cfg, 9);
  int w = cfg.head_width();
  int64_t branch = 0;
  for (auto& [name, t] : model.params().items())
    if (name.rfind("det_head.cls", 0) == 0 && name.find("cls_out") == std::string::npos)
      branch += t.numel();
  int64_t dense = 2LL * (3 * 3 * w * w);  // two dense 3x3 convs, no norm
  CHECK(branch * 3 < dense);
}

TEST_CASE("detection head decouples classification from regression") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> model(cfg, 10);
  bool has_cls = false, has_reg = false;
  for (auto& [name, t] : model.params().items()) {
    if (name.rfind("det_head.cls0", 0) == 0) has_cls = true;
    if (name.rfind("det_head.reg0", 0) == 0) has_reg = true;
  }
  CHECK(has_cls);
  CHECK(has_reg);
}

TEST_CASE("task streams are gradient-isolated behind the shared pyramid") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  cfg.image_size = 96;
  Achelous<float> model(cfg, 11);
  auto out = model.forward(rand_t({1, 3, 96, 96}, 25, 0, 1), rand_t({1, 3, 96, 96}, 26, 0, 1),
                           rand_t({1, 4, 5}, 27), TensorF::ones({1, 4}));
  auto loss = mean(out.seg_a);
  loss.backward();
  auto grad_on = [&](const std::string& name) {
    const TensorF* p = model.params().find(name);
    REQUIRE(p != nullptr);
    return p->has_grad();
  };
  CHECK(grad_on("seg_a.classifier.weight"));
  CHECK(grad_on("neck.lat2a.conv.weight"));
  CHECK(grad_on("encoder.stem.conv.weight"));  // shared trunk is on the path
  CHECK(!grad_on("seg_b.classifier.weight"));
  CHECK(!grad_on("neck.lat2b.conv.weight"));
  CHECK(!grad_on("det_head.cls_out.weight"));
  CHECK(!grad_on("pointnet.classifier.weight"));
}

TEST_CASE("pointnet is permutation equivariant") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> model(cfg, 12);
  NoGradGuard ng;
  int P = 9;
  auto points = rand_t({1, P, 5}, 28);
  auto mask = TensorF::ones({1, P});
  auto base = model.forward_points_only(points, mask);

  std::vector<int> perm(P);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(29);
  for (int i = P - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  auto shuffled = TensorF::zeros({1, P, 5});
  for (int i = 0; i < P; ++i)
    for (int k = 0; k < 5; ++k) shuffled.data()[perm[i] * 5 + k] = points.data()[i * 5 + k];
  auto got = model.forward_points_only(shuffled, mask);
  for (int i = 0; i < P; ++i)
    for (int c = 0; c < 8; ++c)
      CHECK(got.data()[perm[i] * 8 + c] ==
            doctest::Approx(base.data()[i * 8 + c]).epsilon(1e-6));
}

TEST_CASE("pointnet ignores padded points") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> model(cfg, 13);
  NoGradGuard ng;
  auto p1 = rand_t({1, 3, 5}, 30);
  auto m1 = TensorF::ones({1, 3});
  auto base = model.forward_points_only(p1, m1);
  // same three points plus two junk rows masked out
  auto p2 = TensorF::zeros({1, 5, 5});
  std::copy(p1.data().begin(), p1.data().end(), p2.data().begin());
  p2.data()[3 * 5 + 0] = 99;
  p2.data()[4 * 5 + 1] = -99;
  auto m2 = TensorF::zeros({1, 5});
  m2.data()[0] = m2.data()[1] = m2.data()[2] = 1;
  auto got = model.forward_points_only(p2, m2);
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 8; ++c)
      CHECK(got.data()[i * 8 + c] == doctest::Approx(base.data()[i * 8 + c]).epsilon(1e-6));
}

TEST_CASE("pointnet rejects an all-padding cloud") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> model(cfg, 14);
  NoGradGuard ng;
  auto points = rand_t({1, 4, 5}, 31);
  CHECK_THROWS(model.forward_points_only(points, TensorF::zeros({1, 4})));
}

TEST_CASE("pointnet channel plan is a third of the original widths") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> model(cfg, 15);
  auto shape_of = [&](const std::string& name) {
    const TensorF* p = model.params().find(name);
    REQUIRE(p != nullptr);
    return p->shape();
  };
  // LinearLayer stores weights as [in, out]
  CHECK(shape_of("pointnet.point0.lin.weight") == Shape{5, 22});
  CHECK(shape_of("pointnet.point1.lin.weight") == Shape{22, 22});
  CHECK(shape_of("pointnet.point2.lin.weight") == Shape{22, 22});
  CHECK(shape_of("pointnet.point3.lin.weight") == Shape{22, 43});
  CHECK(shape_of("pointnet.point4.lin.weight") == Shape{43, 342});
  CHECK(shape_of("pointnet.seg0.lin.weight") == Shape{364, 171});
  CHECK(shape_of("pointnet.seg1.lin.weight") == Shape{171, 86});
  CHECK(shape_of("pointnet.seg2.lin.weight") == Shape{86, 43});
  CHECK(shape_of("pointnet.classifier.weight") == Shape{43, 8});
}

TEST_CASE("model sizes scale parameter count monotonically") {
  int64_t prev = 0;
  for (const char* tag : {"s0", "s1", "s2"}) {
    Achelous<float> model(ModelConfig::for_size(tag), 16);
    CHECK(model.parameter_count() > prev);
    prev = model.parameter_count();
  }
}

TEST_CASE("same seed builds identical weights, different seed does not") {
  ModelConfig cfg = ModelConfig::for_size("s0");
  Achelous<float> a(cfg, 17), b(cfg, 17), c(cfg, 18);
  auto av = a.params().items(), bv = b.params().items(), cv = c.params().items();
  REQUIRE(av.size() == bv.size());
  bool all_eq = true, any_diff = false;
  for (size_t i = 0; i < av.size(); ++i) {
    if (av[i].second.data() != bv[i].second.data()) all_eq = false;
    if (av[i].second.data() != cv[i].second.data()) any_diff = true;
  }
  CHECK(all_eq);
  CHECK(any_diff);
}
