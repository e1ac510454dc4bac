// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/core/conv.hpp"

#include <Eigen/Core>
#include <cstring>
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

struct ConvDims {
  int64_t N, Cin, H, W, Cout, kh, kw;
  int stride, pad, groups;
  int64_t Ho, Wo;
  int64_t cin_g, cout_g;  // channels per group
  int64_t patch;          // cin_g * kh * kw
};

ConvDims make_dims(const Shape& xs, const Shape& ws, int stride, int pad, int groups) {
  if (xs.size() != 4 || ws.size() != 4) throw std::invalid_argument("conv2d expects 4-D tensors");
  ConvDims d;
  d.N = xs[0];
  d.Cin = xs[1];
  d.H = xs[2];
  d.W = xs[3];
  d.Cout = ws[0];
  d.kh = ws[2];
  d.kw = ws[3];
  d.stride = stride;
  d.pad = pad;
  d.groups = groups;
  if (d.Cin % groups != 0 || d.Cout % groups != 0)
    throw std::invalid_argument("conv2d: channels not divisible by groups");
  d.cin_g = d.Cin / groups;
  d.cout_g = d.Cout / groups;
  if (ws[1] != d.cin_g)
    throw std::invalid_argument("conv2d: weight shape " + shape_str(ws) +
                                " inconsistent with input " + shape_str(xs));
  d.Ho = (d.H + 2 * pad - d.kh) / stride + 1;
  d.Wo = (d.W + 2 * pad - d.kw) / stride + 1;
  if (d.Ho <= 0 || d.Wo <= 0) throw std::invalid_argument("conv2d: empty output");
  d.patch = d.cin_g * d.kh * d.kw;
  return d;
}

// Expands one image's group into a [patch, Ho*Wo] matrix. Out-of-bounds
// positions read zero.
template <class S>
void im2col(const S* img, const ConvDims& d, int g, S* col) {
  const S* src = img + g * d.cin_g * d.H * d.W;
  int64_t hw = d.Ho * d.Wo;
  for (int64_t c = 0; c < d.cin_g; ++c) {
    for (int64_t ky = 0; ky < d.kh; ++ky) {
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        S* row = col + ((c * d.kh + ky) * d.kw + kx) * hw;
        for (int64_t oy = 0; oy < d.Ho; ++oy) {
          int64_t iy = oy * d.stride - d.pad + ky;
          if (iy < 0 || iy >= d.H) {
            std::memset(row + oy * d.Wo, 0, d.Wo * sizeof(S));
            continue;
          }
          const S* line = src + (c * d.H + iy) * d.W;
          for (int64_t ox = 0; ox < d.Wo; ++ox) {
            int64_t ix = ox * d.stride - d.pad + kx;
            row[oy * d.Wo + ox] = (ix >= 0 && ix < d.W) ? line[ix] : S(0);
          }
        }
      }
    }
  }
}

// Scatters a [patch, Ho*Wo] gradient matrix back onto one image's group.
template <class S>
void col2im(const S* col, const ConvDims& d, int g, S* img) {
  S* dst = img + g * d.cin_g * d.H * d.W;
  int64_t hw = d.Ho * d.Wo;
  for (int64_t c = 0; c < d.cin_g; ++c) {
    for (int64_t ky = 0; ky < d.kh; ++ky) {
      for (int64_t kx = 0; kx < d.kw; ++kx) {
        const S* row = col + ((c * d.kh + ky) * d.kw + kx) * hw;
        for (int64_t oy = 0; oy < d.Ho; ++oy) {
          int64_t iy = oy * d.stride - d.pad + ky;
          if (iy < 0 || iy >= d.H) continue;
          S* line = dst + (c * d.H + iy) * d.W;
          for (int64_t ox = 0; ox < d.Wo; ++ox) {
            int64_t ix = ox * d.stride - d.pad + kx;
            if (ix >= 0 && ix < d.W) line[ix] += row[oy * d.Wo + ox];
          }
        }
      }
    }
  }
}

template <class S>
bool is_pointwise(const ConvDims& d) {
  return d.kh == 1 && d.kw == 1 && d.stride == 1 && d.pad == 0;
}

}  // namespace

template <class S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, int stride, int pad,
                 int groups) {
  auto xi = x.impl();
  auto wi = w.impl();
  ConvDims d = make_dims(xi->shape, wi->shape, stride, pad, groups);
  if (b.defined() && b.numel() != d.Cout)
    throw std::invalid_argument("conv2d: bias size mismatch");
  Tensor<S> out = Tensor<S>::zeros({d.N, d.Cout, d.Ho, d.Wo});
  add_macs(d.N * d.groups * d.cout_g * d.patch * d.Ho * d.Wo);
  const S* px = xi->data.data();
  const S* pw = wi->data.data();
  S* po = out.ptr();
  int64_t hw = d.Ho * d.Wo;
  bool pw1x1 = is_pointwise<S>(d);
  parallel_for(0, d.N, [&](int64_t lo, int64_t hi) {
    std::vector<S> col(pw1x1 ? 0 : d.patch * hw);
    for (int64_t n = lo; n < hi; ++n) {
      for (int g = 0; g < d.groups; ++g) {
        CMap<S> W(pw + g * d.cout_g * d.patch, d.cout_g, d.patch);
        MMap<S> O(po + (n * d.Cout + g * d.cout_g) * hw, d.cout_g, hw);
        if (pw1x1) {
          CMap<S> X(px + (n * d.Cin + g * d.cin_g) * hw, d.cin_g, hw);
          O.noalias() = W * X;
        } else {
          im2col(px + n * d.Cin * d.H * d.W, d, g, col.data());
          CMap<S> X(col.data(), d.patch, hw);
          O.noalias() = W * X;
        }
      }
    }
  });
  if (b.defined()) {
    const S* pb = b.ptr();
    parallel_for(0, d.N * d.Cout, [&](int64_t lo, int64_t hi) {
      for (int64_t i = lo; i < hi; ++i) {
        S bv = pb[i % d.Cout];
        S* dst = po + i * hw;
        for (int64_t k = 0; k < hw; ++k) dst[k] += bv;
      }
    });
  }
  std::vector<Tensor<S>> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  auto bi = b.defined() ? b.impl() : nullptr;
  record<S>(out, parents, [xi, wi, bi, d, hw, pw1x1](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    const S* px = xi->data.data();
    const S* pw = wi->data.data();
    if (bi && bi->requires_grad) {
      bi->ensure_grad();
      S* gb = bi->grad.data();
      for (int64_t n = 0; n < d.N; ++n)
        for (int64_t c = 0; c < d.Cout; ++c) {
          const S* src = g + (n * d.Cout + c) * hw;
          S acc = 0;
          for (int64_t k = 0; k < hw; ++k) acc += src[k];
          gb[c] += acc;
        }
    }
    if (wi->requires_grad) {
      wi->ensure_grad();
      S* gw = wi->grad.data();
      // accumulate image-by-image in a fixed order
      std::vector<S> col(pw1x1 ? 0 : d.patch * hw);
      for (int64_t n = 0; n < d.N; ++n) {
        for (int g_ = 0; g_ < d.groups; ++g_) {
          CMap<S> G(g + (n * d.Cout + g_ * d.cout_g) * hw, d.cout_g, hw);
          MMap<S> GW(gw + g_ * d.cout_g * d.patch, d.cout_g, d.patch);
          if (pw1x1) {
            CMap<S> X(px + (n * d.Cin + g_ * d.cin_g) * hw, d.cin_g, hw);
            GW.noalias() += G * X.transpose();
          } else {
            im2col(px + n * d.Cin * d.H * d.W, d, g_, col.data());
            CMap<S> X(col.data(), d.patch, hw);
            GW.noalias() += G * X.transpose();
          }
        }
      }
    }
    if (xi->requires_grad) {
      xi->ensure_grad();
      S* gx = xi->grad.data();
      parallel_for(0, d.N, [&](int64_t lo, int64_t hi) {
        std::vector<S> dcol(pw1x1 ? 0 : d.patch * hw);
        for (int64_t n = lo; n < hi; ++n) {
          for (int g_ = 0; g_ < d.groups; ++g_) {
            CMap<S> W(pw + g_ * d.cout_g * d.patch, d.cout_g, d.patch);
            CMap<S> G(g + (n * d.Cout + g_ * d.cout_g) * hw, d.cout_g, hw);
            if (pw1x1) {
              MMap<S> GX(gx + (n * d.Cin + g_ * d.cin_g) * hw, d.cin_g, hw);
              GX.noalias() += W.transpose() * G;
            } else {
              MMap<S> DC(dcol.data(), d.patch, hw);
              DC.noalias() = W.transpose() * G;
              col2im(dcol.data(), d, g_, gx + n * d.Cin * d.H * d.W);
            }
          }
        }
      });
    }
  });
  return out;
}

int64_t conv2d_macs(const Shape& x, const Shape& w, int stride, int pad, int groups) {
  ConvDims d = make_dims(x, w, stride, pad, groups);
  return d.N * d.groups * d.cout_g * d.patch * d.Ho * d.Wo;
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                              int, int, int);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                               int, int, int);

}  // namespace ach
