// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/core/deform.hpp"

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "ach/core/macs.hpp"
#include "ach/core/parallel.hpp"

namespace ach {

namespace {

template <class S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using CMap = Eigen::Map<const EMat<S>>;
template <class S>
using MMap = Eigen::Map<EMat<S>>;

template <class S>
S sample_at(const S* plane, int64_t H, int64_t W, int64_t y, int64_t x) {
  return (y >= 0 && y < H && x >= 0 && x < W) ? plane[y * W + x] : S(0);
}

// Fills col[(c*9+k) * HW + y*W + x] with the bilinear sample for channel c,
// tap k at output position (y, x).
template <class S>
void deform_im2col(const S* img, const S* off, int64_t C, int64_t H, int64_t W, S* col) {
  int64_t HW = H * W;
  for (int64_t k = 0; k < 9; ++k) {
    int64_t ky = k / 3, kx = k % 3;
    const S* offx = off + (2 * k) * HW;
    const S* offy = off + (2 * k + 1) * HW;
    for (int64_t y = 0; y < H; ++y) {
      for (int64_t x = 0; x < W; ++x) {
        S py = static_cast<S>(y - 1 + ky) + offy[y * W + x];
        S px = static_cast<S>(x - 1 + kx) + offx[y * W + x];
        S fy = std::floor(py), fx = std::floor(px);
        int64_t y0 = static_cast<int64_t>(fy), x0 = static_cast<int64_t>(fx);
        S wy = py - fy, wx = px - fx;
        for (int64_t c = 0; c < C; ++c) {
          const S* plane = img + c * HW;
          S v00 = sample_at(plane, H, W, y0, x0);
          S v01 = sample_at(plane, H, W, y0, x0 + 1);
          S v10 = sample_at(plane, H, W, y0 + 1, x0);
          S v11 = sample_at(plane, H, W, y0 + 1, x0 + 1);
          col[(c * 9 + k) * HW + y * W + x] = (S(1) - wy) * ((S(1) - wx) * v00 + wx * v01) +
                                              wy * ((S(1) - wx) * v10 + wx * v11);
        }
      }
    }
  }
}

}  // namespace

template <class S>
Tensor<S> deformable_conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& offsets) {
  auto xi = x.impl();
  auto wi = w.impl();
  auto oi = offsets.impl();
  const Shape& xs = xi->shape;
  const Shape& ws = wi->shape;
  if (xs.size() != 4 || ws.size() != 4) throw std::invalid_argument("deformable_conv2d: 4-D only");
  if (ws[2] != 3 || ws[3] != 3 || ws[1] != xs[1])
    throw std::invalid_argument("deformable_conv2d: weight must be [K,C,3,3], got " +
                                shape_str(ws));
  if (oi->shape != Shape{xs[0], 18, xs[2], xs[3]})
    throw std::invalid_argument("deformable_conv2d: offsets must be [N,18,H,W], got " +
                                shape_str(oi->shape));
  int64_t N = xs[0], C = xs[1], H = xs[2], W = xs[3], K = ws[0];
  int64_t HW = H * W;
  Tensor<S> out = Tensor<S>::zeros({N, K, H, W});
  add_macs(N * K * C * 9 * HW);
  const S* px = xi->data.data();
  const S* pw = wi->data.data();
  const S* poff = oi->data.data();
  S* po = out.ptr();
  parallel_for(0, N, [&](int64_t lo, int64_t hi) {
    std::vector<S> col(C * 9 * HW);
    for (int64_t n = lo; n < hi; ++n) {
      deform_im2col(px + n * C * HW, poff + n * 18 * HW, C, H, W, col.data());
      CMap<S> Wm(pw, K, C * 9);
      CMap<S> Cm(col.data(), C * 9, HW);
      MMap<S> Om(po + n * K * HW, K, HW);
      Om.noalias() = Wm * Cm;
    }
  });
  record<S>(out, {x, w, offsets}, [xi, wi, oi, N, C, H, W, K, HW](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    const S* px = xi->data.data();
    const S* pw = wi->data.data();
    const S* poff = oi->data.data();
    bool need_x = xi->requires_grad, need_w = wi->requires_grad, need_off = oi->requires_grad;
    if (need_x) xi->ensure_grad();
    if (need_w) wi->ensure_grad();
    if (need_off) oi->ensure_grad();
    if (need_w) {
      // image-by-image in fixed order so the float sum is reproducible
      std::vector<S> col(C * 9 * HW);
      MMap<S> GW(wi->grad.data(), K, C * 9);
      for (int64_t n = 0; n < N; ++n) {
        deform_im2col(px + n * C * HW, poff + n * 18 * HW, C, H, W, col.data());
        CMap<S> G(g + n * K * HW, K, HW);
        CMap<S> Cm(col.data(), C * 9, HW);
        GW.noalias() += G * Cm.transpose();
      }
    }
    if (need_x || need_off) {
      S* gx = need_x ? xi->grad.data() : nullptr;
      S* goff = need_off ? oi->grad.data() : nullptr;
      parallel_for(0, N, [&](int64_t lo, int64_t hi) {
        std::vector<S> dcol(C * 9 * HW);
        for (int64_t n = lo; n < hi; ++n) {
          CMap<S> Wm(pw, K, C * 9);
          CMap<S> G(g + n * K * HW, K, HW);
          MMap<S> DC(dcol.data(), C * 9, HW);
          DC.noalias() = Wm.transpose() * G;
          const S* img = px + n * C * HW;
          const S* off = poff + n * 18 * HW;
          for (int64_t k = 0; k < 9; ++k) {
            int64_t ky = k / 3, kx = k % 3;
            const S* offx = off + (2 * k) * HW;
            const S* offy = off + (2 * k + 1) * HW;
            for (int64_t y = 0; y < H; ++y) {
              for (int64_t x_ = 0; x_ < W; ++x_) {
                S py = static_cast<S>(y - 1 + ky) + offy[y * W + x_];
                S pxx = static_cast<S>(x_ - 1 + kx) + offx[y * W + x_];
                S fy = std::floor(py), fx = std::floor(pxx);
                int64_t y0 = static_cast<int64_t>(fy), x0 = static_cast<int64_t>(fx);
                S wy = py - fy, wx = pxx - fx;
                S acc_dx = 0, acc_dy = 0;
                for (int64_t c = 0; c < C; ++c) {
                  S dv = dcol[(c * 9 + k) * HW + y * W + x_];
                  if (dv == S(0)) continue;
                  const S* plane = img + c * HW;
                  S v00 = sample_at(plane, H, W, y0, x0);
                  S v01 = sample_at(plane, H, W, y0, x0 + 1);
                  S v10 = sample_at(plane, H, W, y0 + 1, x0);
                  S v11 = sample_at(plane, H, W, y0 + 1, x0 + 1);
                  if (need_off) {
                    acc_dx += dv * ((S(1) - wy) * (v01 - v00) + wy * (v11 - v10));
                    acc_dy += dv * ((S(1) - wx) * (v10 - v00) + wx * (v11 - v01));
                  }
                  if (need_x) {
                    S* gplane = gx + n * C * HW + c * HW;
                    auto scatter = [&](int64_t yy, int64_t xx, S coef) {
                      if (yy >= 0 && yy < H && xx >= 0 && xx < W) gplane[yy * W + xx] += dv * coef;
                    };
                    scatter(y0, x0, (S(1) - wy) * (S(1) - wx));
                    scatter(y0, x0 + 1, (S(1) - wy) * wx);
                    scatter(y0 + 1, x0, wy * (S(1) - wx));
                    scatter(y0 + 1, x0 + 1, wy * wx);
                  }
                }
                if (need_off) {
                  goff[n * 18 * HW + (2 * k) * HW + y * W + x_] += acc_dx;
                  goff[n * 18 * HW + (2 * k + 1) * HW + y * W + x_] += acc_dy;
                }
              }
            }
          }
        }
      });
    }
  });
  return out;
}

template Tensor<float> deformable_conv2d(const Tensor<float>&, const Tensor<float>&,
                                         const Tensor<float>&);
template Tensor<double> deformable_conv2d(const Tensor<double>&, const Tensor<double>&,
                                          const Tensor<double>&);

}  // namespace ach
