// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "ach/core/gradcheck.hpp"
#include "ach/core/ops.hpp"
#include "ach/core/rng.hpp"

using namespace ach;

namespace {

TensorD rand_t(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t = TensorD::zeros(s);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Mixes a tensor-valued op into a scalar with fixed random weights so the
// check exercises every output element.
TensorD mix(const TensorD& t, Rng& rng) {
  TensorD r = rand_t(t.shape(), rng);
  return sum(mul(t, r));
}

}  // namespace

TEST_CASE("broadcasting add/mul match hand results") {
  TensorD a = TensorD::from({2, 3}, {1, 2, 3, 4, 5, 6});
  TensorD b = TensorD::from({3}, {10, 20, 30});
  TensorD c = add(a, b);
  CHECK(c.shape() == Shape{2, 3});
  CHECK(c.data() == std::vector<double>{11, 22, 33, 14, 25, 36});

  TensorD col = TensorD::from({2, 1}, {2, 3});
  TensorD d = mul(a, col);
  CHECK(d.data() == std::vector<double>{2, 4, 6, 12, 15, 18});

  CHECK_THROWS(add(TensorD::zeros({2, 3}), TensorD::zeros({2, 4})));
}

TEST_CASE("binary op gradients (broadcast shapes, 5 seeds)") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<TensorD> ins = {rand_t({2, 3, 4}, rng), rand_t({3, 1}, rng, 0.5, 2.0)};
    for (auto fn : {add<double>, sub<double>, mul<double>, div<double>}) {
      auto rep = grad_check(
          [&, fn](const std::vector<TensorD>& x) {
            Rng mixer(99);
            return mix(fn(x[0], x[1]), mixer);
          },
          ins);
      CHECK(rep.max_rel_err < 1e-4);
    }
  }
}

TEST_CASE("min/max elementwise gradients route to the winner") {
  TensorD a = TensorD::from({3}, {1, 5, 2}, true);
  TensorD b = TensorD::from({3}, {4, 3, 2}, true);
  sum(maximum(a, b)).backward();
  CHECK(a.grad() == std::vector<double>{0, 1, 1});  // tie goes to a
  CHECK(b.grad() == std::vector<double>{1, 0, 0});
  a.zero_grad();
  b.zero_grad();
  sum(minimum(a, b)).backward();
  CHECK(a.grad() == std::vector<double>{1, 0, 1});
  CHECK(b.grad() == std::vector<double>{0, 1, 0});
}

TEST_CASE("unary op forward values") {
  TensorD x = TensorD::from({4}, {-1, 0, 0.5, 2});
  CHECK(exp_op(x).data()[3] == doctest::Approx(std::exp(2.0)));
  CHECK(sigmoid(x).data()[1] == doctest::Approx(0.5));
  CHECK(relu(x).data() == std::vector<double>{0, 0, 0.5, 2});
  CHECK(silu(x).data()[1] == doctest::Approx(0.0));
  CHECK(silu(x).data()[3] == doctest::Approx(2.0 / (1.0 + std::exp(-2.0))));
  CHECK(clamp(x, -0.5, 1.0).data() == std::vector<double>{-0.5, 0, 0.5, 1.0});
  CHECK(softplus(TensorD::from({1}, {100.0})).data()[0] == doctest::Approx(100.0));
  CHECK(neg(x).data()[0] == doctest::Approx(1.0));
  CHECK(add_scalar(x, 1.0).data()[0] == doctest::Approx(0.0));
  CHECK((x * 2.0).data()[3] == doctest::Approx(4.0));
}

TEST_CASE("unary op gradients (5 seeds)") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    // keep away from relu/clamp kinks and log/sqrt domain edges
    std::vector<TensorD> pos = {rand_t({2, 5}, rng, 0.3, 2.0)};
    std::vector<TensorD> any = {rand_t({2, 5}, rng, -2.0, 2.0)};
    auto check = [&](auto fn, std::vector<TensorD> ins, double tol = 1e-4) {
      auto rep = grad_check(
          [&](const std::vector<TensorD>& x) {
            Rng mixer(7);
            return mix(fn(x[0]), mixer);
          },
          ins);
      CHECK(rep.max_rel_err < tol);
    };
    check([](const TensorD& t) { return exp_op(t); }, any);
    check([](const TensorD& t) { return log_op(t); }, pos);
    check([](const TensorD& t) { return sqrt_op(t); }, pos);
    check([](const TensorD& t) { return sigmoid(t); }, any);
    check([](const TensorD& t) { return silu(t); }, any);
    check([](const TensorD& t) { return softplus(t); }, any);
    check([](const TensorD& t) { return relu(t); }, pos);
    check([](const TensorD& t) { return neg(t); }, any);
  }
}

TEST_CASE("reductions: sum/mean/sum_dims/mean_dims") {
  TensorD x = TensorD::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(sum(x).item() == doctest::Approx(21));
  CHECK(mean(x).item() == doctest::Approx(3.5));

  TensorD s0 = sum_dims(x, {0}, false);
  CHECK(s0.shape() == Shape{3});
  CHECK(s0.data() == std::vector<double>{5, 7, 9});

  TensorD s1 = sum_dims(x, {1}, true);
  CHECK(s1.shape() == Shape{2, 1});
  CHECK(s1.data() == std::vector<double>{6, 15});

  TensorD m = mean_dims(x, {0, 1}, false);
  CHECK(m.shape() == Shape{1});
  CHECK(m.item() == doctest::Approx(3.5));
}

TEST_CASE("sum_dims gradient broadcasts back") {
  Rng rng(3);
  std::vector<TensorD> ins = {rand_t({2, 3, 4}, rng)};
  auto rep = grad_check(
      [](const std::vector<TensorD>& x) {
        Rng mixer(11);
        return mix(sum_dims(x[0], {1}, false), mixer);
      },
      ins);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("max_dim takes the max and routes gradient to the argmax") {
  TensorD x = TensorD::from({2, 3}, {1, 9, 2, 8, 3, 7}, true);
  TensorD m = max_dim(x, 1);
  CHECK(m.shape() == Shape{2, 1});
  CHECK(m.data() == std::vector<double>{9, 8});
  sum(m).backward();
  CHECK(x.grad() == std::vector<double>{0, 1, 0, 1, 0, 0});
}

TEST_CASE("reshape/permute/concat/slice round trips") {
  TensorD x = TensorD::from({2, 3}, {1, 2, 3, 4, 5, 6});
  TensorD r = reshape(x, {3, 2});
  CHECK(r.data() == x.data());
  TensorD inferred = reshape(x, {-1});
  CHECK(inferred.shape() == Shape{6});
  CHECK_THROWS(reshape(x, {4, 2}));

  TensorD p = permute(x, {1, 0});
  CHECK(p.shape() == Shape{3, 2});
  CHECK(p.data() == std::vector<double>{1, 4, 2, 5, 3, 6});

  TensorD c = concat<double>({x, x}, 0);
  CHECK(c.shape() == Shape{4, 3});
  TensorD c1 = concat<double>({x, x}, 1);
  CHECK(c1.shape() == Shape{2, 6});
  CHECK(c1.data() == std::vector<double>{1, 2, 3, 1, 2, 3, 4, 5, 6, 4, 5, 6});

  TensorD s = slice(c1, 1, 3, 3);
  CHECK(s.shape() == Shape{2, 3});
  CHECK(s.data() == x.data());
  CHECK_THROWS(slice(x, 1, 2, 5));
}

TEST_CASE("shape op gradients") {
  Rng rng(5);
  std::vector<TensorD> ins = {rand_t({2, 3, 4}, rng), rand_t({2, 2, 4}, rng)};
  auto rep = grad_check(
      [](const std::vector<TensorD>& x) {
        Rng mixer(13);
        TensorD cat = concat<double>({x[0], x[1]}, 1);         // [2,5,4]
        TensorD perm = permute(cat, {2, 0, 1});        // [4,2,5]
        TensorD sl = slice(perm, 2, 1, 3);             // [4,2,3]
        return mix(reshape(sl, {24}), mixer);
      },
      ins);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("gather_rows picks rows and scatters gradient with duplicates") {
  TensorD x = TensorD::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  TensorD g = gather_rows(x, {2, 0, 2});
  CHECK(g.shape() == Shape{3, 2});
  CHECK(g.data() == std::vector<double>{5, 6, 1, 2, 5, 6});
  sum(g).backward();
  CHECK(x.grad() == std::vector<double>{1, 1, 0, 0, 2, 2});
  CHECK_THROWS(gather_rows(x, {3}));
}

TEST_CASE("matmul matches hand result and a batched case") {
  TensorD a = TensorD::from({2, 3}, {1, 2, 3, 4, 5, 6});
  TensorD b = TensorD::from({3, 2}, {7, 8, 9, 10, 11, 12});
  TensorD c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 2});
  CHECK(c.data() == std::vector<double>{58, 64, 139, 154});

  // batched lhs against shared rhs
  TensorD ab = TensorD::from({2, 1, 3}, {1, 0, 0, 0, 1, 0});
  TensorD r = matmul(ab, b);
  CHECK(r.shape() == Shape{2, 1, 2});
  CHECK(r.data() == std::vector<double>{7, 8, 9, 10});
  CHECK_THROWS(matmul(a, a));
}

TEST_CASE("matmul gradients, batched and shared-rhs (5 seeds)") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<TensorD> ins = {rand_t({2, 3, 4}, rng), rand_t({2, 4, 2}, rng)};
    auto rep = grad_check(
        [](const std::vector<TensorD>& x) {
          Rng mixer(17);
          return mix(matmul(x[0], x[1]), mixer);
        },
        ins);
    CHECK(rep.max_rel_err < 1e-4);

    std::vector<TensorD> shared = {rand_t({2, 3, 4}, rng), rand_t({4, 5}, rng)};
    auto rep2 = grad_check(
        [](const std::vector<TensorD>& x) {
          Rng mixer(19);
          return mix(matmul(x[0], x[1]), mixer);
        },
        shared);
    CHECK(rep2.max_rel_err < 1e-4);
  }
}

TEST_CASE("softmax rows sum to one and log_softmax is its log") {
  Rng rng(23);
  TensorD x = rand_t({3, 5}, rng, -3, 3);
  TensorD s = softmax(x, 1);
  for (int r = 0; r < 3; ++r) {
    double tot = 0;
    for (int c = 0; c < 5; ++c) tot += s.data()[r * 5 + c];
    CHECK(tot == doctest::Approx(1.0));
  }
  TensorD ls = log_softmax(x, 1);
  for (int i = 0; i < 15; ++i)
    CHECK(ls.data()[i] == doctest::Approx(std::log(s.data()[i])));
  // stability under large inputs
  TensorD big = TensorD::from({1, 2}, {1000.0, 1000.0});
  CHECK(softmax(big, 1).data()[0] == doctest::Approx(0.5));
}

TEST_CASE("softmax and log_softmax gradients including inner dims") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<TensorD> ins = {rand_t({2, 4, 3}, rng, -2, 2)};
    for (int dim : {1, 2}) {
      auto rep = grad_check(
          [dim](const std::vector<TensorD>& x) {
            Rng mixer(29);
            return mix(softmax(x[0], dim), mixer);
          },
          ins);
      CHECK(rep.max_rel_err < 1e-4);
      auto rep2 = grad_check(
          [dim](const std::vector<TensorD>& x) {
            Rng mixer(31);
            return mix(log_softmax(x[0], dim), mixer);
          },
          ins);
      CHECK(rep2.max_rel_err < 1e-4);
    }
  }
}
