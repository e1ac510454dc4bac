// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/train/det_loss.hpp"

#include <stdexcept>

#include "ach/train/losses.hpp"

namespace ach {

namespace {

// Widest sane log-size; exp(12)*stride is far beyond any image, so clamping
// here only guards against runaway steps producing inf*0 in the IoU algebra.
constexpr double kLogSizeLimit = 12.0;

}  // namespace

DetTargets build_det_targets(const DetPrediction<float>& pred, const AnchorGrid& grid,
                             const std::vector<std::vector<GtBox>>& gts) {
  const int64_t A = static_cast<int64_t>(grid.stride.size());
  const int N = static_cast<int>(pred.cls[0].dim(0));
  if (static_cast<int>(gts.size()) != N)
    throw std::invalid_argument("build_det_targets: batch size mismatch");
  const int classes = static_cast<int>(pred.cls[0].dim(1));

  // Raw per-level strides into the prediction buffers.
  std::array<int64_t, 3> level_off{};
  std::array<int64_t, 3> level_hw{};
  for (int l = 0, off = 0; l < 3; ++l) {
    level_hw[l] = pred.cls[l].dim(2) * pred.cls[l].dim(3);
    level_off[l] = off;
    off += static_cast<int>(level_hw[l]);
  }

  DetTargets out;
  out.images = N;
  out.anchors = A;
  out.cls_target.assign(static_cast<size_t>(N * A * classes), 0.0f);
  out.obj_target.assign(static_cast<size_t>(N * A), 0.0f);

  auto map_at = [&](const Tensor<float>& t, int n, int c, int64_t a, int l) {
    int64_t cell = a - level_off[l];
    return t.data()[(static_cast<int64_t>(n) * t.dim(1) + c) * level_hw[l] + cell];
  };

  for (int n = 0; n < N; ++n) {
    SimOtaInput in;
    in.boxes.resize(static_cast<size_t>(A));
    in.cls_logits.assign(static_cast<size_t>(A), std::vector<float>(classes));
    in.points.resize(static_cast<size_t>(A));
    in.strides.resize(static_cast<size_t>(A));
    for (int64_t a = 0; a < A; ++a) {
      int l = grid.level[a];
      std::array<float, 4> reg;
      for (int c = 0; c < 4; ++c) reg[c] = map_at(pred.reg[l], n, c, a, l);
      in.boxes[a] = decode_anchor(grid.gx[a], grid.gy[a], grid.stride[a], reg);
      for (int c = 0; c < classes; ++c) in.cls_logits[a][c] = map_at(pred.cls[l], n, c, a, l);
      in.points[a] = {static_cast<float>(grid.stride[a] * grid.gx[a]),
                      static_cast<float>(grid.stride[a] * grid.gy[a])};
      in.strides[a] = static_cast<float>(grid.stride[a]);
    }
    SimOtaResult res = simota_assign(in, gts[n]);

    std::vector<uint8_t> seen(static_cast<size_t>(A), 0);
    for (const auto& list : res.gt_anchors)
      for (int a : list) {
        if (seen[a]) throw std::logic_error("build_det_targets: anchor owned by two GTs");
        seen[a] = 1;
      }

    for (int64_t a = 0; a < A; ++a) {
      int g = res.anchor_gt[a];
      if (g < 0) continue;
      int64_t row = static_cast<int64_t>(n) * A + a;
      out.obj_target[row] = 1.0f;
      out.cls_target[row * classes + gts[n][g].cls] = 1.0f;
      out.pos_rows.push_back(row);
      out.pos_gt.push_back({gts[n][g].x1, gts[n][g].y1, gts[n][g].x2, gts[n][g].y2});
    }
    out.assignments.push_back(std::move(res));
  }
  return out;
}

template <class S>
Tensor<S> flatten_det_maps(const std::array<Tensor<S>, 3>& levels) {
  std::vector<Tensor<S>> flat;
  for (const Tensor<S>& x : levels) {
    Tensor<S> p = permute(x, {0, 2, 3, 1});
    flat.push_back(reshape(p, {x.dim(0), x.dim(2) * x.dim(3), x.dim(1)}));
  }
  Tensor<S> cat = concat(flat, 1);
  return reshape(cat, {cat.dim(0) * cat.dim(1), cat.dim(2)});
}

template <class S>
DetLossParts<S> det_loss(const DetPrediction<S>& pred, const AnchorGrid& grid,
                         const DetTargets& targets, S alpha, S gamma) {
  Tensor<S> cls_flat = flatten_det_maps(pred.cls);
  Tensor<S> reg_flat = flatten_det_maps(pred.reg);
  Tensor<S> obj_flat = flatten_det_maps(pred.obj);
  const int64_t rows = cls_flat.dim(0);
  const int64_t classes = cls_flat.dim(1);
  if (rows != targets.images * targets.anchors)
    throw std::invalid_argument("det_loss: prediction/target row mismatch");

  DetLossParts<S> out;
  {
    std::vector<S> ct(targets.cls_target.begin(), targets.cls_target.end());
    out.cls = focal_loss(cls_flat, Tensor<S>::from({rows, classes}, std::move(ct)), alpha, gamma);
    std::vector<S> ot(targets.obj_target.begin(), targets.obj_target.end());
    out.obj = focal_loss(obj_flat, Tensor<S>::from({rows, 1}, std::move(ot)), alpha, gamma);
  }

  const int64_t P = targets.n_pos();
  if (P == 0) {
    // Keep the regression head attached to the graph with a zero-valued term.
    out.box = mul_scalar(sum(reg_flat), S(0));
    return out;
  }
  Tensor<S> rowsT = gather_rows(reg_flat, targets.pos_rows);
  Tensor<S> tx = slice(rowsT, 1, 0, 1), ty = slice(rowsT, 1, 1, 1);
  Tensor<S> tw = slice(rowsT, 1, 2, 1), th = slice(rowsT, 1, 3, 1);

  std::vector<S> gxv(P), gyv(P), sv(P), g1x(P), g1y(P), g2x(P), g2y(P), gav(P);
  for (int64_t i = 0; i < P; ++i) {
    int64_t a = targets.pos_rows[i] % targets.anchors;
    gxv[i] = static_cast<S>(grid.gx[a]);
    gyv[i] = static_cast<S>(grid.gy[a]);
    sv[i] = static_cast<S>(grid.stride[a]);
    const auto& g = targets.pos_gt[i];
    g1x[i] = static_cast<S>(g[0]);
    g1y[i] = static_cast<S>(g[1]);
    g2x[i] = static_cast<S>(g[2]);
    g2y[i] = static_cast<S>(g[3]);
    gav[i] = static_cast<S>((g[2] - g[0]) * (g[3] - g[1]));
  }
  Shape col{P, 1};
  Tensor<S> gx = Tensor<S>::from(col, std::move(gxv)), gy = Tensor<S>::from(col, std::move(gyv));
  Tensor<S> st = Tensor<S>::from(col, std::move(sv));
  Tensor<S> cx = mul(add(tx, gx), st), cy = mul(add(ty, gy), st);
  Tensor<S> w = mul(exp_op(clamp(tw, S(-kLogSizeLimit), S(kLogSizeLimit))), st);
  Tensor<S> h = mul(exp_op(clamp(th, S(-kLogSizeLimit), S(kLogSizeLimit))), st);
  Tensor<S> x1 = sub(cx, mul_scalar(w, S(0.5))), x2 = add(cx, mul_scalar(w, S(0.5)));
  Tensor<S> y1 = sub(cy, mul_scalar(h, S(0.5))), y2 = add(cy, mul_scalar(h, S(0.5)));

  Tensor<S> bx1 = Tensor<S>::from(col, std::move(g1x)), by1 = Tensor<S>::from(col, std::move(g1y));
  Tensor<S> bx2 = Tensor<S>::from(col, std::move(g2x)), by2 = Tensor<S>::from(col, std::move(g2y));
  Tensor<S> iw = relu(sub(minimum(x2, bx2), maximum(x1, bx1)));
  Tensor<S> ih = relu(sub(minimum(y2, by2), maximum(y1, by1)));
  Tensor<S> inter = mul(iw, ih);
  Tensor<S> uni =
      add_scalar(sub(add(mul(w, h), Tensor<S>::from(col, std::move(gav))), inter), S(1e-9));
  out.box = mean(add_scalar(neg(div(inter, uni)), S(1)));
  return out;
}

#define ACH_INSTANTIATE(S)                                                            \
  template Tensor<S> flatten_det_maps<S>(const std::array<Tensor<S>, 3>&);            \
  template DetLossParts<S> det_loss<S>(const DetPrediction<S>&, const AnchorGrid&,    \
                                       const DetTargets&, S, S);
ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
