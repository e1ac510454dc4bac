// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ach/core/gradcheck.hpp"
#include "ach/core/rng.hpp"
#include "ach/model/detect.hpp"
#include "ach/train/det_loss.hpp"
#include "ach/train/losses.hpp"
#include "ach/train/optim.hpp"

using namespace ach;

namespace {

TensorD rand_d(const Shape& shape, uint64_t seed, double lo = -1, double hi = 1,
               bool req = false) {
  Rng rng(seed);
  auto t = TensorD::uniform(shape, lo, hi, rng);
  t.set_requires_grad(req);
  return t;
}

double scalar(const TensorD& t) { return t.data()[0]; }
float scalar(const TensorF& t) { return t.data()[0]; }

}  // namespace

TEST_CASE("bce_with_logits equals the stable binary cross entropy") {
  // z=0, t=1: softplus(0) - 0 = ln 2
  auto z = TensorD::zeros({1});
  auto t = TensorD::ones({1});
  CHECK(scalar(bce_with_logits(z, t)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // hand oracle across signs and targets
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    double zv = rng.uniform(-6, 6);
    double tv = rng.uniform(0, 1);
    auto zz = TensorD::full({1}, zv);
    auto tt = TensorD::full({1}, tv);
    double p = 1.0 / (1.0 + std::exp(-zv));
    double want = -(tv * std::log(p) + (1 - tv) * std::log(1 - p));
    CHECK(scalar(bce_with_logits(zz, tt)) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("focal loss hits the hand-computed p_t = 0.5 value") {
  // logit 0 on a positive target: p_t = 0.5, one positive → normalizer 1
  auto z = TensorD::zeros({1});
  auto t = TensorD::ones({1});
  double want = 0.25 * 0.25 * std::log(2.0);  // 0.043321...
  CHECK(scalar(focal_loss(z, t)) == doctest::Approx(want).epsilon(1e-9));
  CHECK(scalar(focal_loss(z, t)) == doctest::Approx(0.04332).epsilon(1e-3));
}

TEST_CASE("focal loss with gamma 0 and balanced alpha halves the cross entropy") {
  Rng rng(2);
  auto z = TensorD::uniform({2, 8}, -3, 3, rng);
  auto t = TensorD::zeros({2, 8});
  int positives = 0;
  for (int64_t i = 0; i < t.numel(); ++i) {
    t.data()[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    positives += t.data()[i] > 0 ? 1 : 0;
  }
  REQUIRE(positives > 0);
  double ce = 0;
  for (int64_t i = 0; i < z.numel(); ++i) {
    double p = 1.0 / (1.0 + std::exp(-z.data()[i]));
    ce += -(t.data()[i] * std::log(p) + (1 - t.data()[i]) * std::log(1 - p));
  }
  double want = 0.5 * ce / positives;
  CHECK(scalar(focal_loss(z, t, 0.5, 0.0)) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("focal loss vanishes as p_t approaches 1 and blows up toward 0") {
  auto t = TensorD::ones({1});
  CHECK(scalar(focal_loss(TensorD::full({1}, 12.0), t)) < 1e-6);
  CHECK(scalar(focal_loss(TensorD::full({1}, -12.0), t)) > 1.0);
}

TEST_CASE("focal loss is finite at saturated logits") {
  auto z = TensorD::full({4}, 40.0);
  auto t = TensorD::zeros({4});
  double v = scalar(focal_loss(z, t));
  CHECK(std::isfinite(v));
}

TEST_CASE("dice loss on exact, disjoint and half-covered masks") {
  // exact match: loss <= eps / (2|Y| + eps)
  auto t = TensorD::zeros({1, 1, 8, 8});
  for (int i = 0; i < 16; ++i) t.data()[i] = 1;
  CHECK(scalar(dice_loss(t, t)) <= 1.0 / (2 * 16 + 1.0));
  // disjoint equal-area masks: loss ~ 1
  auto a = TensorD::zeros({1, 1, 32, 32});
  auto b = TensorD::zeros({1, 1, 32, 32});
  for (int i = 0; i < 400; ++i) a.data()[i] = 1;
  for (int i = 400; i < 800; ++i) b.data()[i] = 1;
  CHECK(scalar(dice_loss(a, b)) == doctest::Approx(1.0).epsilon(2e-3));
  // pred a strict half-subset of the target: loss -> 1/3 for |Y| >> eps
  auto y = TensorD::zeros({1, 1, 64, 64});
  auto p = TensorD::zeros({1, 1, 64, 64});
  for (int i = 0; i < 4000; ++i) y.data()[i] = 1;
  for (int i = 0; i < 2000; ++i) p.data()[i] = 1;
  CHECK(scalar(dice_loss(p, y)) == doctest::Approx(1.0 / 3).epsilon(1e-3));
  // and exactly 1 - (2k+eps)/(3k+eps) at k=2
  auto y2 = TensorD::zeros({1, 1, 4, 4});
  auto p2 = TensorD::zeros({1, 1, 4, 4});
  for (int i = 0; i < 4; ++i) y2.data()[i] = 1;
  for (int i = 0; i < 2; ++i) p2.data()[i] = 1;
  CHECK(scalar(dice_loss(p2, y2)) == doctest::Approx(1.0 - 5.0 / 7).epsilon(1e-9));
}

TEST_CASE("dice loss averages over the class dimension") {
  // class 0 perfect, class 1 disjoint -> mean of ~0 and ~1
  auto p = TensorD::zeros({1, 2, 16, 16});
  auto t = TensorD::zeros({1, 2, 16, 16});
  for (int i = 0; i < 100; ++i) { p.data()[i] = 1; t.data()[i] = 1; }
  for (int i = 0; i < 100; ++i) p.data()[256 + i] = 1;
  for (int i = 100; i < 200; ++i) t.data()[256 + i] = 1;
  auto per = dice_per_class(p, t);
  CHECK(per.shape() == Shape{2});
  CHECK(per.data()[0] == doctest::Approx(0.0).epsilon(5e-3));
  CHECK(per.data()[1] == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(scalar(dice_loss(p, t)) ==
        doctest::Approx(0.5 * (per.data()[0] + per.data()[1])).epsilon(1e-12));
}

TEST_CASE("nll loss: uniform prediction gives ln C, one-hot gives zero") {
  int C = 8;
  auto lp = TensorD::full({1, 3, C}, -std::log(double(C)));
  std::vector<int> labels = {0, 3, 7};
  std::vector<uint8_t> valid = {1, 1, 1};
  CHECK(scalar(nll_loss(lp, labels, valid)) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  CHECK(scalar(nll_loss(lp, labels, valid)) == doctest::Approx(2.0794).epsilon(1e-4));

  // near-one-hot correct prediction
  auto hot = TensorD::full({1, 2, C}, -40.0);
  hot.data()[0 * C + 2] = 0.0;
  hot.data()[1 * C + 5] = 0.0;
  CHECK(scalar(nll_loss(hot, {2, 5}, {1, 1})) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("nll loss ignores padded points and rejects empty masks") {
  int C = 8;
  Rng rng(3);
  auto lp = TensorD::uniform({1, 4, C}, -5, -0.1, rng);
  std::vector<int> labels = {1, 2, 3, 4};
  double only_first_two = scalar(nll_loss(lp, labels, {1, 1, 0, 0}));
  // junk in the padded rows must not matter
  auto lp2 = lp.detach();
  for (int i = 2 * C; i < 4 * C; ++i) lp2.data()[i] = -999.0;
  CHECK(scalar(nll_loss(lp2, labels, {1, 1, 0, 0})) ==
        doctest::Approx(only_first_two).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(nll_loss(lp, labels, {0, 0, 0, 0}), "nll_loss: no valid points",
                       std::invalid_argument);
}

TEST_CASE("total loss reduces to the plain sum at s = 0") {
  auto L = TensorD::full({4}, 0.7);
  auto s = TensorD::zeros({4});
  CHECK(scalar(total_loss(L, s)) == doctest::Approx(4 * 0.7).epsilon(1e-12));
}

TEST_CASE("total loss gradient in s matches -exp(-s)L + 1") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto L = TensorD::uniform({4}, 0.05, 3.0, rng);
    auto s = TensorD::uniform({4}, -1.0, 1.0, rng);
    s.set_requires_grad(true);
    auto total = total_loss(L, s);
    total.backward();
    for (int t = 0; t < 4; ++t) {
      double want = -std::exp(-s.data()[t]) * L.data()[t] + 1.0;
      CHECK(s.grad()[t] == doctest::Approx(want).epsilon(1e-6));
    }
    // finite differences agree too
    auto report = grad_check(
        [&](const std::vector<TensorD>& in) { return total_loss(L, in[0]); }, {s.detach()});
    CHECK(report.max_rel_err < 1e-6);
  }
}

TEST_CASE("the noisier task's log-variance drifts up, the clean one stays") {
  // two tasks, constant losses 2.5 and 0.2; gradient descent on s only
  auto s = TensorF::zeros({2}, true);
  SgdOptimizer opt({{"s", s}}, 0.0f);
  auto L = TensorF::zeros({2});
  L.data()[0] = 2.5f;
  L.data()[1] = 0.2f;
  for (int i = 0; i < 50; ++i) {
    opt.zero_grad();
    auto tot = total_loss(L, s);
    tot.backward();
    opt.step(0.05f);
  }
  CHECK(s.data()[0] > 0.5f);   // drifts toward ln 2.5 ~ 0.92
  CHECK(s.data()[1] < 0.0f);   // drifts toward ln 0.2 ~ -1.6
  CHECK(std::abs(s.data()[0] - std::log(2.5f)) < 0.45f);
}

TEST_CASE("losses differentiate cleanly (gradient checks in double)") {
  Rng rng(5);
  auto zc = TensorD::uniform({2, 6}, -2, 2, rng);
  auto tc = TensorD::zeros({2, 6});
  for (int64_t i = 0; i < tc.numel(); ++i) tc.data()[i] = rng.uniform() < 0.5 ? 1 : 0;
  auto r1 = grad_check(
      [&](const std::vector<TensorD>& in) { return focal_loss(in[0], tc); }, {zc});
  CHECK(r1.max_rel_err < 1e-4);

  auto probs = TensorD::uniform({1, 2, 6, 6}, 0.05, 0.95, rng);
  auto mask = TensorD::zeros({1, 2, 6, 6});
  for (int64_t i = 0; i < mask.numel(); ++i) mask.data()[i] = rng.uniform() < 0.4 ? 1 : 0;
  auto r2 = grad_check(
      [&](const std::vector<TensorD>& in) { return dice_loss(in[0], mask); }, {probs});
  CHECK(r2.max_rel_err < 1e-4);

  auto logits = TensorD::uniform({1, 5, 8}, -2, 2, rng);
  auto r3 = grad_check(
      [&](const std::vector<TensorD>& in) {
        return nll_loss(log_softmax(in[0], 2), {0, 1, 2, 3, 4}, {1, 1, 1, 0, 1});
      },
      {logits});
  CHECK(r3.max_rel_err < 1e-4);
}

TEST_CASE("sgd: single step, two-step recurrence, zero-grad decay") {
  auto mk = [] {
    auto p = TensorF::zeros({2}, true);
    p.data()[0] = 1.0f;
    p.data()[1] = -2.0f;
    return p;
  };
  // momentum 0, lr 0.1, g = 1 -> p drops by exactly 0.1
  {
    auto p = mk();
    SgdOptimizer opt({{"p", p}}, 0.0f);
    p.grad()[0] = 1.0f;
    p.grad()[1] = 1.0f;
    opt.step(0.1f);
    CHECK(p.data()[0] == doctest::Approx(0.9f).epsilon(1e-7));
  }
  // two steps of constant g with momentum m: total dp = -lr*(1 + (1+m))*g
  {
    auto p = mk();
    SgdOptimizer opt({{"p", p}}, 0.937f);
    for (int i = 0; i < 2; ++i) {
      p.zero_grad();
      p.grad()[0] = 1.0f;
      p.grad()[1] = 1.0f;
      opt.step(0.1f);
    }
    CHECK(p.data()[0] == doctest::Approx(1.0f - 0.1f * (1 + 1.937f)).epsilon(1e-6));
  }
  // zero grad: p holds, velocity decays by m (next unit grad moves less extra)
  {
    auto p = mk();
    SgdOptimizer opt({{"p", p}}, 0.5f);
    p.grad()[0] = 1.0f;
    p.grad()[1] = 0.0f;
    opt.step(0.1f);
    float after_one = p.data()[0];
    p.zero_grad();
    p.grad()[0] = 0.0f;  // explicit zero gradient
    opt.step(0.1f);
    CHECK(p.data()[0] == doctest::Approx(after_one - 0.1f * 0.5f).epsilon(1e-7));
  }
}

TEST_CASE("sgd refuses to step a parameter with no gradient") {
  auto p = TensorF::zeros({2}, true);
  SgdOptimizer opt({{"stuck", p}}, 0.9f);
  CHECK_THROWS_WITH_AS(opt.step(0.1f), "sgd_step: no gradient for parameter stuck",
                       std::runtime_error);
}

TEST_CASE("cosine schedule endpoints, midpoint and warmup ramp") {
  float lr0 = 0.03f, lr_min = 0.0003f;
  // no warmup: the pure half-cosine
  CHECK(cosine_lr(0, 100, 0, lr0, lr_min) == doctest::Approx(lr0).epsilon(1e-7));
  CHECK(cosine_lr(100, 100, 0, lr0, lr_min) == doctest::Approx(lr_min).epsilon(1e-7));
  CHECK(cosine_lr(50, 100, 0, lr0, lr_min) ==
        doctest::Approx(0.5 * (lr0 + lr_min)).epsilon(1e-7));
  // warmup: linear from zero, lr0 at the warmup boundary, lr_min at the end
  CHECK(cosine_lr(0, 100, 10, lr0, lr_min) == doctest::Approx(0.0f).epsilon(1e-9));
  CHECK(cosine_lr(5, 100, 10, lr0, lr_min) == doctest::Approx(0.5 * lr0).epsilon(1e-7));
  CHECK(cosine_lr(10, 100, 10, lr0, lr_min) == doctest::Approx(lr0).epsilon(1e-7));
  CHECK(cosine_lr(100, 100, 10, lr0, lr_min) == doctest::Approx(lr_min).epsilon(1e-7));
  CHECK_THROWS(cosine_lr(101, 100, 10, lr0, lr_min));
  CHECK_THROWS(cosine_lr(-1, 100, 10, lr0, lr_min));
}

TEST_CASE("ema: copy at d=0, geometric closed form at fixed d") {
  auto p = TensorF::full({3}, 2.0f);
  p.set_requires_grad(true);
  std::vector<std::pair<std::string, TensorF>> params = {{"w", p}};
  EmaTracker ema(params, 0.9998f);
  // step 0: decay ramp starts at 0 -> shadow copies the raw weights
  ema.update(params, 0);
  CHECK(ema.last_decay() == doctest::Approx(0.0f).epsilon(1e-9));
  CHECK(ema.snapshot()[0].second.data()[0] == doctest::Approx(2.0f).epsilon(1e-7));

  // large step: d ~ base. constant params: e_k = d^k e0 + (1 - d^k) p
  for (int i = 0; i < 40; ++i) ema.update(params, 4'000'000);
  float d = ema.last_decay();
  CHECK(d == doctest::Approx(0.9998f).epsilon(1e-6));
  CHECK(ema.snapshot()[0].second.data()[0] == doctest::Approx(2.0f).epsilon(1e-7));

  // now tracking a moved parameter from a known shadow
  p.data()[0] = p.data()[1] = p.data()[2] = 5.0f;
  int k = 25;
  for (int i = 0; i < k; ++i) ema.update(params, 4'000'000);
  float want = std::pow(d, float(k)) * 2.0f + (1 - std::pow(d, float(k))) * 5.0f;
  CHECK(ema.snapshot()[0].second.data()[0] == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("ema rejects a mismatched parameter set") {
  auto p = TensorF::full({3}, 2.0f);
  std::vector<std::pair<std::string, TensorF>> params = {{"w", p}};
  EmaTracker ema(params, 0.9998f);
  std::vector<std::pair<std::string, TensorF>> other = {{"v", p}};
  CHECK_THROWS(ema.update(other, 10));
}

namespace {

// A tiny synthetic prediction: one image, known anchor layout.
DetPrediction<float> tiny_pred(int image_size, uint64_t seed, float lo = -1, float hi = 1) {
  Rng rng(seed);
  DetPrediction<float> p;
  for (int l = 0; l < 3; ++l) {
    int hw = image_size / (8 << l);
    p.cls[l] = TensorF::uniform({1, 7, hw, hw}, lo, hi, rng);
    p.reg[l] = TensorF::uniform({1, 4, hw, hw}, lo, hi, rng);
    p.obj[l] = TensorF::uniform({1, 1, hw, hw}, lo, hi, rng);
  }
  return p;
}

}  // namespace

TEST_CASE("det targets: a centered GT produces positives and one-hot targets") {
  int S = 64;
  auto grid = make_anchor_grid(S);
  auto pred = tiny_pred(S, 6);
  GtBox gt;
  gt.x1 = 16; gt.y1 = 16; gt.x2 = 48; gt.y2 = 48;
  gt.cls = 3;
  auto targets = build_det_targets(pred, grid, {{gt}});
  CHECK(targets.images == 1);
  CHECK(targets.anchors == grid.count());
  REQUIRE(targets.n_pos() > 0);
  for (int64_t i = 0; i < targets.n_pos(); ++i) {
    int64_t row = targets.pos_rows[i];
    CHECK(targets.obj_target[row] == 1.0f);
    CHECK(targets.cls_target[row * 7 + 3] == 1.0f);
    CHECK(targets.pos_gt[i][0] == 16.0f);
  }
  // anchors not in the positive set are background
  int64_t n_obj = 0;
  for (float v : targets.obj_target) n_obj += v > 0 ? 1 : 0;
  CHECK(n_obj == targets.n_pos());
}

TEST_CASE("det loss: all parts finite, zero GT yields a connected zero box term") {
  int S = 64;
  auto grid = make_anchor_grid(S);
  auto pred = tiny_pred(S, 7);
  for (auto* t : {&pred.cls, &pred.reg, &pred.obj})
    for (auto& x : *t) x.set_requires_grad(true);
  auto targets = build_det_targets(pred, grid, {{}});
  CHECK(targets.n_pos() == 0);
  auto parts = det_loss(pred, grid, targets);
  CHECK(scalar(parts.box) == 0.0f);
  auto combined = parts.combined();
  combined.backward();
  CHECK(std::isfinite(scalar(combined)));
  // reg head still received a (zero) gradient, so optimizers see it
  CHECK(pred.reg[0].has_grad());
}

TEST_CASE("det loss box term decreases as predictions approach the GT") {
  int S = 64;
  auto grid = make_anchor_grid(S);
  GtBox gt;
  gt.x1 = 20; gt.y1 = 20; gt.x2 = 44; gt.y2 = 44;
  gt.cls = 0;
  auto far = tiny_pred(S, 8, -0.4f, 0.4f);
  auto targets = build_det_targets(far, grid, {{gt}});
  REQUIRE(targets.n_pos() > 0);
  auto parts_far = det_loss(far, grid, targets);

  // write the exact encoded GT into every positive anchor's regression slot
  auto near = far;
  for (int l = 0; l < 3; ++l) near.reg[l] = far.reg[l].detach();
  int64_t level_anchors[3];
  for (int l = 0; l < 3; ++l) {
    int hw = S / (8 << l);
    level_anchors[l] = int64_t(hw) * hw;
  }
  for (int64_t i = 0; i < targets.n_pos(); ++i) {
    int64_t row = targets.pos_rows[i];
    int64_t a = row % grid.count();
    auto enc = encode_box({gt.x1, gt.y1, gt.x2, gt.y2}, grid.gx[a], grid.gy[a], grid.stride[a]);
    int l = grid.level[a];
    int64_t base = a;
    for (int j = 0; j < l; ++j) base -= level_anchors[j];
    int hw = S / (8 << l);
    for (int c = 0; c < 4; ++c) near.reg[l].data()[c * hw * hw + base] = enc[c];
  }
  auto parts_near = det_loss(near, grid, targets);
  CHECK(scalar(parts_near.box) < 1e-4f);
  CHECK(scalar(parts_far.box) > scalar(parts_near.box));
}

TEST_CASE("det loss differentiates: gradient check through cls/obj/box") {
  // double-precision mirror of the loss on a tiny grid
  int S = 32;
  auto grid = make_anchor_grid(S);
  auto predf = tiny_pred(S, 9, -0.5f, 0.5f);
  GtBox gt;
  gt.x1 = 6; gt.y1 = 6; gt.x2 = 26; gt.y2 = 26;
  gt.cls = 1;
  auto targets = build_det_targets(predf, grid, {{gt}});
  REQUIRE(targets.n_pos() > 0);

  auto to_d = [](const TensorF& t) {
    auto d = TensorD::zeros(t.shape());
    for (int64_t i = 0; i < t.numel(); ++i) d.data()[i] = t.data()[i];
    return d;
  };
  std::vector<TensorD> inputs;
  for (int l = 0; l < 3; ++l) inputs.push_back(to_d(predf.cls[l]));
  for (int l = 0; l < 3; ++l) inputs.push_back(to_d(predf.reg[l]));
  for (int l = 0; l < 3; ++l) inputs.push_back(to_d(predf.obj[l]));
  auto fn = [&](const std::vector<TensorD>& in) {
    DetPrediction<double> p;
    for (int l = 0; l < 3; ++l) {
      p.cls[l] = in[l];
      p.reg[l] = in[3 + l];
      p.obj[l] = in[6 + l];
    }
    return det_loss(p, grid, targets).combined();
  };
  auto report = grad_check(fn, inputs);
  CHECK(report.max_rel_err < 1e-4);
}
