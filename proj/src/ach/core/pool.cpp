// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/core/pool.hpp"

#include <limits>
#include <stdexcept>

#include "ach/core/parallel.hpp"

namespace ach {

template <class S>
Tensor<S> pool2d(const Tensor<S>& x, PoolKind kind, int kernel, int stride, int pad) {
  auto xi = x.impl();
  if (xi->shape.size() != 4) throw std::invalid_argument("pool2d expects a 4-D tensor");
  int64_t N = xi->shape[0], C = xi->shape[1], H = xi->shape[2], W = xi->shape[3];
  if (kernel < 1 || kernel > H + 2 * pad || kernel > W + 2 * pad)
    throw std::invalid_argument("pool2d: kernel larger than padded input");
  int64_t Ho = (H + 2 * pad - kernel) / stride + 1;
  int64_t Wo = (W + 2 * pad - kernel) / stride + 1;
  Tensor<S> out = Tensor<S>::zeros({N, C, Ho, Wo});
  // For max pooling remember the winning input offset per output element.
  auto argmax = kind == PoolKind::kMax
                    ? std::make_shared<std::vector<int64_t>>(N * C * Ho * Wo)
                    : nullptr;
  const S* px = xi->data.data();
  S* po = out.ptr();
  parallel_for(0, N * C, [&](int64_t lo, int64_t hi) {
    for (int64_t p = lo; p < hi; ++p) {
      const S* plane = px + p * H * W;
      S* oplane = po + p * Ho * Wo;
      for (int64_t oy = 0; oy < Ho; ++oy) {
        for (int64_t ox = 0; ox < Wo; ++ox) {
          int64_t y0 = oy * stride - pad, x0 = ox * stride - pad;
          if (kind == PoolKind::kAvg) {
            S acc = 0;
            int cnt = 0;
            for (int ky = 0; ky < kernel; ++ky) {
              int64_t y = y0 + ky;
              if (y < 0 || y >= H) continue;
              for (int kx = 0; kx < kernel; ++kx) {
                int64_t xx = x0 + kx;
                if (xx < 0 || xx >= W) continue;
                acc += plane[y * W + xx];
                ++cnt;
              }
            }
            oplane[oy * Wo + ox] = acc / static_cast<S>(cnt);
          } else {
            S best = -std::numeric_limits<S>::infinity();
            int64_t bidx = -1;
            for (int ky = 0; ky < kernel; ++ky) {
              int64_t y = y0 + ky;
              if (y < 0 || y >= H) continue;
              for (int kx = 0; kx < kernel; ++kx) {
                int64_t xx = x0 + kx;
                if (xx < 0 || xx >= W) continue;
                if (plane[y * W + xx] > best) {
                  best = plane[y * W + xx];
                  bidx = y * W + xx;
                }
              }
            }
            oplane[oy * Wo + ox] = best;
            (*argmax)[p * Ho * Wo + oy * Wo + ox] = bidx;
          }
        }
      }
    }
  });
  record<S>(out, {x}, [xi, argmax, kind, kernel, stride, pad, N, C, H, W, Ho,
                       Wo](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    parallel_for(0, N * C, [&](int64_t lo, int64_t hi) {
      for (int64_t p = lo; p < hi; ++p) {
        S* gplane = gx + p * H * W;
        const S* goplane = g + p * Ho * Wo;
        for (int64_t oy = 0; oy < Ho; ++oy) {
          for (int64_t ox = 0; ox < Wo; ++ox) {
            S gv = goplane[oy * Wo + ox];
            if (kind == PoolKind::kMax) {
              gplane[(*argmax)[p * Ho * Wo + oy * Wo + ox]] += gv;
              continue;
            }
            int64_t y0 = oy * stride - pad, x0 = ox * stride - pad;
            int cnt = 0;
            for (int ky = 0; ky < kernel; ++ky) {
              int64_t y = y0 + ky;
              if (y < 0 || y >= H) continue;
              for (int kx = 0; kx < kernel; ++kx) {
                int64_t xx = x0 + kx;
                if (xx >= 0 && xx < W) ++cnt;
              }
            }
            S share = gv / static_cast<S>(cnt);
            for (int ky = 0; ky < kernel; ++ky) {
              int64_t y = y0 + ky;
              if (y < 0 || y >= H) continue;
              for (int kx = 0; kx < kernel; ++kx) {
                int64_t xx = x0 + kx;
                if (xx >= 0 && xx < W) gplane[y * W + xx] += share;
              }
            }
          }
        }
      }
    });
  });
  return out;
}

template <class S>
Tensor<S> upsample2x(const Tensor<S>& x) {
  auto xi = x.impl();
  if (xi->shape.size() != 4) throw std::invalid_argument("upsample2x expects a 4-D tensor");
  int64_t N = xi->shape[0], C = xi->shape[1], H = xi->shape[2], W = xi->shape[3];
  Tensor<S> out = Tensor<S>::zeros({N, C, 2 * H, 2 * W});
  const S* px = xi->data.data();
  S* po = out.ptr();
  parallel_for(0, N * C, [&](int64_t lo, int64_t hi) {
    for (int64_t p = lo; p < hi; ++p) {
      const S* plane = px + p * H * W;
      S* oplane = po + p * 4 * H * W;
      for (int64_t y = 0; y < H; ++y)
        for (int64_t xx = 0; xx < W; ++xx) {
          S v = plane[y * W + xx];
          S* o00 = oplane + (2 * y) * 2 * W + 2 * xx;
          o00[0] = v;
          o00[1] = v;
          o00[2 * W] = v;
          o00[2 * W + 1] = v;
        }
    }
  });
  record<S>(out, {x}, [xi, N, C, H, W](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    parallel_for(0, N * C, [&](int64_t lo, int64_t hi) {
      for (int64_t p = lo; p < hi; ++p) {
        const S* goplane = g + p * 4 * H * W;
        S* gplane = gx + p * H * W;
        for (int64_t y = 0; y < H; ++y)
          for (int64_t xx = 0; xx < W; ++xx) {
            const S* g00 = goplane + (2 * y) * 2 * W + 2 * xx;
            gplane[y * W + xx] += g00[0] + g00[1] + g00[2 * W] + g00[2 * W + 1];
          }
      }
    });
  });
  return out;
}

template <class S>
Tensor<S> channel_shuffle(const Tensor<S>& x, int groups) {
  auto xi = x.impl();
  if (xi->shape.size() != 4) throw std::invalid_argument("channel_shuffle expects a 4-D tensor");
  int64_t N = xi->shape[0], C = xi->shape[1], HW = xi->shape[2] * xi->shape[3];
  if (C % groups != 0) throw std::invalid_argument("channel_shuffle: C not divisible by groups");
  int64_t per = C / groups;
  // destination channel j pulls from source channel (j % g) * per + j / g
  Tensor<S> out = Tensor<S>::zeros(xi->shape);
  const S* px = xi->data.data();
  S* po = out.ptr();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t j = 0; j < C; ++j) {
      int64_t src = (j % groups) * per + j / groups;
      std::copy_n(px + (n * C + src) * HW, HW, po + (n * C + j) * HW);
    }
  record<S>(out, {x}, [xi, N, C, HW, groups, per](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    for (int64_t n = 0; n < N; ++n)
      for (int64_t j = 0; j < C; ++j) {
        int64_t src = (j % groups) * per + j / groups;
        const S* gsrc = g + (n * C + j) * HW;
        S* dst = gx + (n * C + src) * HW;
        for (int64_t i = 0; i < HW; ++i) dst[i] += gsrc[i];
      }
  });
  return out;
}

#define ACH_INSTANTIATE(S)                                                \
  template Tensor<S> pool2d(const Tensor<S>&, PoolKind, int, int, int);  \
  template Tensor<S> upsample2x(const Tensor<S>&);                       \
  template Tensor<S> channel_shuffle(const Tensor<S>&, int);

ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
