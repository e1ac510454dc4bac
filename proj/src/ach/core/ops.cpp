// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include "ach/core/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "ach/core/macs.hpp"
#include "ach/core/parallel.hpp"

namespace ach {

namespace {

constexpr int kMaxDims = 8;

Shape broadcast_shape(const Shape& a, const Shape& b) {
  int nd = static_cast<int>(std::max(a.size(), b.size()));
  Shape out(nd, 1);
  for (int i = 0; i < nd; ++i) {
    int64_t da = i < nd - static_cast<int>(a.size()) ? 1 : a[i - (nd - a.size())];
    int64_t db = i < nd - static_cast<int>(b.size()) ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1)
      throw std::invalid_argument("broadcast mismatch: " + shape_str(a) + " vs " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Right-aligned strides of `s` against broadcast result `out`; 0 marks a
// broadcast axis.
void bcast_strides(const Shape& s, const Shape& out, int64_t* str) {
  int nd = static_cast<int>(out.size());
  int off = nd - static_cast<int>(s.size());
  int64_t acc = 1;
  for (int i = nd - 1; i >= 0; --i) {
    if (i < off || s[i - off] == 1) {
      str[i] = 0;
    } else {
      str[i] = acc;
      acc *= s[i - off];
    }
  }
}

// Visits every element of the broadcast result in row-major order and hands
// the callback the linear offsets into a, b and the output.
template <class F>
void bcast_visit(const Shape& os, const Shape& as, const Shape& bs, F&& f) {
  int nd = static_cast<int>(os.size());
  if (nd > kMaxDims) throw std::invalid_argument("too many dims");
  int64_t astr[kMaxDims], bstr[kMaxDims];
  bcast_strides(as, os, astr);
  bcast_strides(bs, os, bstr);
  int64_t total = shape_numel(os);
  int64_t coord[kMaxDims] = {0};
  int64_t ao = 0, bo = 0;
  for (int64_t i = 0; i < total; ++i) {
    f(ao, bo, i);
    for (int d = nd - 1; d >= 0; --d) {
      ++coord[d];
      ao += astr[d];
      bo += bstr[d];
      if (coord[d] < os[d]) break;
      coord[d] = 0;
      ao -= astr[d] * os[d];
      bo -= bstr[d] * os[d];
    }
  }
}

template <class S, class FwdF, class DaF, class DbF>
Tensor<S> binary_op(const Tensor<S>& a, const Tensor<S>& b, FwdF fwd, DaF da, DbF db) {
  auto ai = a.impl();
  auto bi = b.impl();
  Tensor<S> out;
  bool same = ai->shape == bi->shape;
  if (same) {
    out = Tensor<S>::zeros(ai->shape);
    const S* pa = ai->data.data();
    const S* pb = bi->data.data();
    S* po = out.ptr();
    int64_t n = ai->numel();
    for (int64_t i = 0; i < n; ++i) po[i] = fwd(pa[i], pb[i]);
  } else {
    Shape os = broadcast_shape(ai->shape, bi->shape);
    out = Tensor<S>::zeros(os);
    const S* pa = ai->data.data();
    const S* pb = bi->data.data();
    S* po = out.ptr();
    bcast_visit(os, ai->shape, bi->shape,
                [&](int64_t ao, int64_t bo, int64_t oo) { po[oo] = fwd(pa[ao], pb[bo]); });
  }
  record<S>(out, {a, b}, [ai, bi, same, da, db](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    const S* pa = ai->data.data();
    const S* pb = bi->data.data();
    bool na = ai->requires_grad, nb = bi->requires_grad;
    if (na) ai->ensure_grad();
    if (nb) bi->ensure_grad();
    S* ga = na ? ai->grad.data() : nullptr;
    S* gb = nb ? bi->grad.data() : nullptr;
    if (same) {
      int64_t n = ai->numel();
      for (int64_t i = 0; i < n; ++i) {
        if (na) ga[i] += da(pa[i], pb[i]) * g[i];
        if (nb) gb[i] += db(pa[i], pb[i]) * g[i];
      }
    } else {
      bcast_visit(o.shape, ai->shape, bi->shape, [&](int64_t ao, int64_t bo, int64_t oo) {
        if (na) ga[ao] += da(pa[ao], pb[bo]) * g[oo];
        if (nb) gb[bo] += db(pa[ao], pb[bo]) * g[oo];
      });
    }
  });
  return out;
}

template <class S, class FwdF, class DF>
Tensor<S> unary_op(const Tensor<S>& x, FwdF fwd, DF dfdx) {
  auto xi = x.impl();
  Tensor<S> out = Tensor<S>::zeros(xi->shape);
  const S* px = xi->data.data();
  S* po = out.ptr();
  int64_t n = xi->numel();
  for (int64_t i = 0; i < n; ++i) po[i] = fwd(px[i]);
  record<S>(out, {x}, [xi, dfdx](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    const S* px = xi->data.data();
    const S* py = o.data.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    int64_t n = xi->numel();
    for (int64_t i = 0; i < n; ++i) gx[i] += dfdx(px[i], py[i]) * g[i];
  });
  return out;
}

template <class S>
S stable_softplus(S x) {
  if (x > S(30)) return x;
  if (x < S(-30)) return std::exp(x);
  return std::log1p(std::exp(x));
}

}  // namespace

// ---- binary ----

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_op(
      a, b, [](S x, S y) { return x + y; }, [](S, S) { return S(1); }, [](S, S) { return S(1); });
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_op(
      a, b, [](S x, S y) { return x - y; }, [](S, S) { return S(1); }, [](S, S) { return S(-1); });
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_op(
      a, b, [](S x, S y) { return x * y; }, [](S, S y) { return y; }, [](S x, S) { return x; });
}

template <class S>
Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_op(
      a, b, [](S x, S y) { return x / y; }, [](S, S y) { return S(1) / y; },
      [](S x, S y) { return -x / (y * y); });
}

template <class S>
Tensor<S> minimum(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_op(
      a, b, [](S x, S y) { return x <= y ? x : y; },
      [](S x, S y) { return x <= y ? S(1) : S(0); }, [](S x, S y) { return x <= y ? S(0) : S(1); });
}

template <class S>
Tensor<S> maximum(const Tensor<S>& a, const Tensor<S>& b) {
  return binary_op(
      a, b, [](S x, S y) { return x >= y ? x : y; },
      [](S x, S y) { return x >= y ? S(1) : S(0); }, [](S x, S y) { return x >= y ? S(0) : S(1); });
}

// ---- scalar ----

template <class S>
Tensor<S> add_scalar(const Tensor<S>& a, S c) {
  return unary_op(
      a, [c](S x) { return x + c; }, [](S, S) { return S(1); });
}

template <class S>
Tensor<S> mul_scalar(const Tensor<S>& a, S c) {
  return unary_op(
      a, [c](S x) { return x * c; }, [c](S, S) { return c; });
}

// ---- unary ----

template <class S>
Tensor<S> neg(const Tensor<S>& x) {
  return mul_scalar(x, S(-1));
}

template <class S>
Tensor<S> exp_op(const Tensor<S>& x) {
  return unary_op(
      x, [](S v) { return std::exp(v); }, [](S, S y) { return y; });
}

template <class S>
Tensor<S> log_op(const Tensor<S>& x) {
  return unary_op(
      x, [](S v) { return std::log(v); }, [](S v, S) { return S(1) / v; });
}

template <class S>
Tensor<S> sqrt_op(const Tensor<S>& x) {
  return unary_op(
      x, [](S v) { return std::sqrt(v); }, [](S, S y) { return S(0.5) / y; });
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  return unary_op(
      x, [](S v) { return S(1) / (S(1) + std::exp(-v)); },
      [](S, S y) { return y * (S(1) - y); });
}

template <class S>
Tensor<S> silu(const Tensor<S>& x) {
  return unary_op(
      x, [](S v) { return v / (S(1) + std::exp(-v)); },
      [](S v, S) {
        S s = S(1) / (S(1) + std::exp(-v));
        return s * (S(1) + v * (S(1) - s));
      });
}

template <class S>
Tensor<S> relu(const Tensor<S>& x) {
  return unary_op(
      x, [](S v) { return v > S(0) ? v : S(0); }, [](S v, S) { return v > S(0) ? S(1) : S(0); });
}

template <class S>
Tensor<S> softplus(const Tensor<S>& x) {
  return unary_op(
      x, [](S v) { return stable_softplus(v); },
      [](S v, S) { return S(1) / (S(1) + std::exp(-v)); });
}

template <class S>
Tensor<S> clamp(const Tensor<S>& x, S lo, S hi) {
  return unary_op(
      x, [lo, hi](S v) { return std::min(hi, std::max(lo, v)); },
      [lo, hi](S v, S) { return (v >= lo && v <= hi) ? S(1) : S(0); });
}

// ---- reductions ----

template <class S>
Tensor<S> sum(const Tensor<S>& x) {
  auto xi = x.impl();
  S acc = 0;
  for (S v : xi->data) acc += v;
  Tensor<S> out = Tensor<S>::from({1}, {acc});
  record<S>(out, {x}, [xi](const TensorImpl<S>& o) {
    S g = o.grad[0];
    xi->ensure_grad();
    for (auto& v : xi->grad) v += g;
  });
  return out;
}

template <class S>
Tensor<S> mean(const Tensor<S>& x) {
  return mul_scalar(sum(x), S(1) / static_cast<S>(x.numel()));
}

namespace {

// Per-element output offset for a dim-subset reduction, as strides with the
// reduced axes zeroed.
template <class S, class F>
void reduce_visit(const Shape& in, const std::vector<bool>& reduced, F&& f) {
  int nd = static_cast<int>(in.size());
  int64_t ostr[kMaxDims];
  int64_t acc = 1;
  for (int i = nd - 1; i >= 0; --i) {
    if (reduced[i]) {
      ostr[i] = 0;
    } else {
      ostr[i] = acc;
      acc *= in[i];
    }
  }
  int64_t total = shape_numel(in);
  int64_t coord[kMaxDims] = {0};
  int64_t oo = 0;
  for (int64_t i = 0; i < total; ++i) {
    f(i, oo);
    for (int d = nd - 1; d >= 0; --d) {
      ++coord[d];
      oo += ostr[d];
      if (coord[d] < in[d]) break;
      coord[d] = 0;
      oo -= ostr[d] * in[d];
    }
  }
}

}  // namespace

template <class S>
Tensor<S> sum_dims(const Tensor<S>& x, std::vector<int> dims, bool keepdim) {
  auto xi = x.impl();
  int nd = x.ndim();
  std::vector<bool> reduced(nd, false);
  for (int d : dims) {
    if (d < 0) d += nd;
    if (d < 0 || d >= nd) throw std::invalid_argument("sum_dims: bad dim");
    reduced[d] = true;
  }
  Shape kshape(nd);
  for (int i = 0; i < nd; ++i) kshape[i] = reduced[i] ? 1 : xi->shape[i];
  Tensor<S> out = Tensor<S>::zeros(kshape);
  const S* px = xi->data.data();
  S* po = out.ptr();
  reduce_visit<S>(xi->shape, reduced, [&](int64_t i, int64_t oo) { po[oo] += px[i]; });
  record<S>(out, {x}, [xi, reduced](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    reduce_visit<S>(xi->shape, reduced, [&](int64_t i, int64_t oo) { gx[i] += g[oo]; });
  });
  if (!keepdim) {
    Shape squeezed;
    for (int i = 0; i < nd; ++i)
      if (!reduced[i]) squeezed.push_back(kshape[i]);
    if (squeezed.empty()) squeezed.push_back(1);
    return reshape(out, squeezed);
  }
  return out;
}

template <class S>
Tensor<S> mean_dims(const Tensor<S>& x, std::vector<int> dims, bool keepdim) {
  int nd = x.ndim();
  int64_t cnt = 1;
  for (int d : dims) {
    if (d < 0) d += nd;
    cnt *= x.shape()[d];
  }
  return mul_scalar(sum_dims(x, dims, keepdim), S(1) / static_cast<S>(cnt));
}

template <class S>
Tensor<S> max_dim(const Tensor<S>& x, int dim) {
  auto xi = x.impl();
  int nd = x.ndim();
  if (dim < 0) dim += nd;
  Shape os = xi->shape;
  os[dim] = 1;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < dim; ++i) outer *= xi->shape[i];
  for (int i = dim + 1; i < nd; ++i) inner *= xi->shape[i];
  int64_t len = xi->shape[dim];
  Tensor<S> out = Tensor<S>::zeros(os);
  auto argmax = std::make_shared<std::vector<int64_t>>(outer * inner);
  const S* px = xi->data.data();
  S* po = out.ptr();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      int64_t base = o * len * inner + in;
      S best = px[base];
      int64_t bidx = base;
      for (int64_t k = 1; k < len; ++k) {
        S v = px[base + k * inner];
        if (v > best) {
          best = v;
          bidx = base + k * inner;
        }
      }
      po[o * inner + in] = best;
      (*argmax)[o * inner + in] = bidx;
    }
  }
  record<S>(out, {x}, [xi, argmax](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    for (size_t i = 0; i < argmax->size(); ++i) gx[(*argmax)[i]] += g[i];
  });
  return out;
}

// ---- shape ----

template <class S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  // one -1 dim is inferred
  int64_t known = 1;
  int infer = -1;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) throw std::invalid_argument("reshape: multiple -1 dims");
      infer = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) shape[infer] = x.numel() / known;
  if (shape_numel(shape) != x.numel())
    throw std::invalid_argument("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  auto xi = x.impl();
  Tensor<S> out = Tensor<S>::from(shape, xi->data);
  record<S>(out, {x}, [xi](const TensorImpl<S>& o) {
    xi->ensure_grad();
    accumulate_grad(*xi, o.grad.data(), o.numel());
  });
  return out;
}

namespace {

template <class S>
void permute_copy(const Shape& in_shape, const std::vector<int>& perm, const S* src, S* dst,
                  bool add) {
  int nd = static_cast<int>(in_shape.size());
  int64_t in_str[kMaxDims];
  int64_t acc = 1;
  for (int i = nd - 1; i >= 0; --i) {
    in_str[i] = acc;
    acc *= in_shape[i];
  }
  Shape os(nd);
  int64_t src_str[kMaxDims];
  for (int i = 0; i < nd; ++i) {
    os[i] = in_shape[perm[i]];
    src_str[i] = in_str[perm[i]];
  }
  int64_t total = shape_numel(in_shape);
  int64_t coord[kMaxDims] = {0};
  int64_t so = 0;
  for (int64_t i = 0; i < total; ++i) {
    if (add)
      dst[so] += src[i];
    else
      dst[i] = src[so];
    for (int d = nd - 1; d >= 0; --d) {
      ++coord[d];
      so += src_str[d];
      if (coord[d] < os[d]) break;
      coord[d] = 0;
      so -= src_str[d] * os[d];
    }
  }
}

}  // namespace

template <class S>
Tensor<S> permute(const Tensor<S>& x, const std::vector<int>& perm) {
  auto xi = x.impl();
  int nd = x.ndim();
  if (static_cast<int>(perm.size()) != nd) throw std::invalid_argument("permute: rank mismatch");
  Shape os(nd);
  for (int i = 0; i < nd; ++i) os[i] = xi->shape[perm[i]];
  Tensor<S> out = Tensor<S>::zeros(os);
  permute_copy(xi->shape, perm, xi->data.data(), out.ptr(), false);
  record<S>(out, {x}, [xi, perm](const TensorImpl<S>& o) {
    xi->ensure_grad();
    // scatter: out index i came from strided src offset; reuse the walker
    permute_copy<S>(xi->shape, perm, o.grad.data(), xi->grad.data(), true);
  });
  return out;
}

template <class S>
Tensor<S> concat(const std::vector<Tensor<S>>& xs, int dim) {
  if (xs.empty()) throw std::invalid_argument("concat: empty list");
  int nd = xs[0].ndim();
  if (dim < 0) dim += nd;
  Shape os = xs[0].shape();
  int64_t total_d = 0;
  for (const auto& t : xs) {
    if (t.ndim() != nd) throw std::invalid_argument("concat: rank mismatch");
    for (int i = 0; i < nd; ++i)
      if (i != dim && t.shape()[i] != os[i])
        throw std::invalid_argument("concat: shape mismatch " + shape_str(t.shape()));
    total_d += t.shape()[dim];
  }
  os[dim] = total_d;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < dim; ++i) outer *= os[i];
  for (int i = dim + 1; i < nd; ++i) inner *= os[i];
  Tensor<S> out = Tensor<S>::zeros(os);
  S* po = out.ptr();
  int64_t off = 0;
  for (const auto& t : xs) {
    int64_t blk = t.shape()[dim] * inner;
    const S* ps = t.ptr();
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(po + o * total_d * inner + off, ps + o * blk, blk * sizeof(S));
    off += blk;
  }
  std::vector<std::shared_ptr<TensorImpl<S>>> impls;
  for (auto& t : xs) impls.push_back(t.impl());
  Tensor<S> result = out;
  record<S>(result, xs, [impls, outer, inner, total_d, dim](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    int64_t off = 0;
    for (auto& xi : impls) {
      int64_t blk = xi->shape[dim] * inner;
      if (xi->requires_grad) {
        xi->ensure_grad();
        S* gx = xi->grad.data();
        for (int64_t ot = 0; ot < outer; ++ot) {
          const S* src = g + ot * total_d * inner + off;
          S* dst = gx + ot * blk;
          for (int64_t i = 0; i < blk; ++i) dst[i] += src[i];
        }
      }
      off += blk;
    }
  });
  return result;
}

template <class S>
Tensor<S> slice(const Tensor<S>& x, int dim, int64_t start, int64_t len) {
  auto xi = x.impl();
  int nd = x.ndim();
  if (dim < 0) dim += nd;
  if (start < 0 || start + len > xi->shape[dim])
    throw std::invalid_argument("slice out of range on dim " + std::to_string(dim));
  Shape os = xi->shape;
  os[dim] = len;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < dim; ++i) outer *= xi->shape[i];
  for (int i = dim + 1; i < nd; ++i) inner *= xi->shape[i];
  int64_t src_d = xi->shape[dim];
  Tensor<S> out = Tensor<S>::zeros(os);
  S* po = out.ptr();
  const S* px = xi->data.data();
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(po + o * len * inner, px + (o * src_d + start) * inner, len * inner * sizeof(S));
  record<S>(out, {x}, [xi, outer, inner, src_d, start, len](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    for (int64_t ot = 0; ot < outer; ++ot) {
      S* dst = gx + (ot * src_d + start) * inner;
      const S* src = g + ot * len * inner;
      for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
    }
  });
  return out;
}

template <class S>
Tensor<S> gather_rows(const Tensor<S>& x, const std::vector<int64_t>& idx) {
  if (x.ndim() != 2) throw std::invalid_argument("gather_rows expects a 2-D tensor");
  auto xi = x.impl();
  int64_t rows = xi->shape[0], cols = xi->shape[1];
  Tensor<S> out = Tensor<S>::zeros({static_cast<int64_t>(idx.size()), cols});
  S* po = out.ptr();
  const S* px = xi->data.data();
  for (size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= rows) throw std::invalid_argument("gather_rows: index out of range");
    std::memcpy(po + j * cols, px + idx[j] * cols, cols * sizeof(S));
  }
  record<S>(out, {x}, [xi, idx, cols](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    for (size_t j = 0; j < idx.size(); ++j)
      for (int64_t c = 0; c < cols; ++c) gx[idx[j] * cols + c] += g[j * cols + c];
  });
  return out;
}

// ---- matmul ----

namespace {

template <class S>
using EMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using CMap = Eigen::Map<const EMat<S>>;
template <class S>
using MMap = Eigen::Map<EMat<S>>;

}  // namespace

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  auto ai = a.impl();
  auto bi = b.impl();
  int nda = a.ndim(), ndb = b.ndim();
  if (nda < 2 || ndb < 2) throw std::invalid_argument("matmul expects rank >= 2");
  int64_t M = ai->shape[nda - 2], K = ai->shape[nda - 1];
  int64_t Kb = bi->shape[ndb - 2], N = bi->shape[ndb - 1];
  if (K != Kb)
    throw std::invalid_argument("matmul inner dims: " + shape_str(ai->shape) + " x " +
                                shape_str(bi->shape));
  int64_t batch = 1;
  for (int i = 0; i < nda - 2; ++i) batch *= ai->shape[i];
  bool b_batched = ndb > 2;
  if (b_batched) {
    int64_t bb = 1;
    for (int i = 0; i < ndb - 2; ++i) bb *= bi->shape[i];
    if (bb != batch) throw std::invalid_argument("matmul batch dims differ");
  }
  Shape os(ai->shape.begin(), ai->shape.end() - 1);
  os.push_back(N);
  Tensor<S> out = Tensor<S>::zeros(os);
  add_macs(batch * M * K * N);
  const S* pa = ai->data.data();
  const S* pb = bi->data.data();
  S* po = out.ptr();
  parallel_for(0, batch, [&](int64_t lo, int64_t hi) {
    for (int64_t n = lo; n < hi; ++n) {
      CMap<S> A(pa + n * M * K, M, K);
      CMap<S> B(pb + (b_batched ? n * K * N : 0), K, N);
      MMap<S> C(po + n * M * N, M, N);
      C.noalias() = A * B;
    }
  });
  record<S>(out, {a, b}, [ai, bi, M, K, N, batch, b_batched](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    const S* pa = ai->data.data();
    const S* pb = bi->data.data();
    if (ai->requires_grad) {
      ai->ensure_grad();
      S* ga = ai->grad.data();
      parallel_for(0, batch, [&](int64_t lo, int64_t hi) {
        for (int64_t n = lo; n < hi; ++n) {
          CMap<S> G(g + n * M * N, M, N);
          CMap<S> B(pb + (b_batched ? n * K * N : 0), K, N);
          MMap<S> GA(ga + n * M * K, M, K);
          GA.noalias() += G * B.transpose();
        }
      });
    }
    if (bi->requires_grad) {
      bi->ensure_grad();
      S* gb = bi->grad.data();
      if (b_batched) {
        parallel_for(0, batch, [&](int64_t lo, int64_t hi) {
          for (int64_t n = lo; n < hi; ++n) {
            CMap<S> A(pa + n * M * K, M, K);
            CMap<S> G(g + n * M * N, M, N);
            MMap<S> GB(gb + n * K * N, K, N);
            GB.noalias() += A.transpose() * G;
          }
        });
      } else {
        // shared rhs: sequential accumulation keeps the sum order fixed
        MMap<S> GB(gb, K, N);
        for (int64_t n = 0; n < batch; ++n) {
          CMap<S> A(pa + n * M * K, M, K);
          CMap<S> G(g + n * M * N, M, N);
          GB.noalias() += A.transpose() * G;
        }
      }
    }
  });
  return out;
}

// ---- softmax ----

namespace {

template <class S, class F>
void along_dim(const Shape& shape, int dim, F&& f) {
  int nd = static_cast<int>(shape.size());
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < dim; ++i) outer *= shape[i];
  for (int i = dim + 1; i < nd; ++i) inner *= shape[i];
  int64_t len = shape[dim];
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t in = 0; in < inner; ++in) f(o * len * inner + in, inner, len);
}

}  // namespace

template <class S>
Tensor<S> softmax(const Tensor<S>& x, int dim) {
  auto xi = x.impl();
  if (dim < 0) dim += x.ndim();
  Tensor<S> out = Tensor<S>::zeros(xi->shape);
  const S* px = xi->data.data();
  S* po = out.ptr();
  along_dim<S>(xi->shape, dim, [&](int64_t base, int64_t stride, int64_t len) {
    S mx = px[base];
    for (int64_t k = 1; k < len; ++k) mx = std::max(mx, px[base + k * stride]);
    S tot = 0;
    for (int64_t k = 0; k < len; ++k) {
      S e = std::exp(px[base + k * stride] - mx);
      po[base + k * stride] = e;
      tot += e;
    }
    S inv = S(1) / tot;
    for (int64_t k = 0; k < len; ++k) po[base + k * stride] *= inv;
  });
  record<S>(out, {x}, [xi, dim](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    const S* y = o.data.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    along_dim<S>(o.shape, dim, [&](int64_t base, int64_t stride, int64_t len) {
      S dot = 0;
      for (int64_t k = 0; k < len; ++k) dot += g[base + k * stride] * y[base + k * stride];
      for (int64_t k = 0; k < len; ++k) {
        int64_t i = base + k * stride;
        gx[i] += y[i] * (g[i] - dot);
      }
    });
  });
  return out;
}

template <class S>
Tensor<S> log_softmax(const Tensor<S>& x, int dim) {
  auto xi = x.impl();
  if (dim < 0) dim += x.ndim();
  Tensor<S> out = Tensor<S>::zeros(xi->shape);
  const S* px = xi->data.data();
  S* po = out.ptr();
  along_dim<S>(xi->shape, dim, [&](int64_t base, int64_t stride, int64_t len) {
    S mx = px[base];
    for (int64_t k = 1; k < len; ++k) mx = std::max(mx, px[base + k * stride]);
    S tot = 0;
    for (int64_t k = 0; k < len; ++k) tot += std::exp(px[base + k * stride] - mx);
    S lse = mx + std::log(tot);
    for (int64_t k = 0; k < len; ++k) po[base + k * stride] = px[base + k * stride] - lse;
  });
  record<S>(out, {x}, [xi, dim](const TensorImpl<S>& o) {
    const S* g = o.grad.data();
    const S* y = o.data.data();
    xi->ensure_grad();
    S* gx = xi->grad.data();
    along_dim<S>(o.shape, dim, [&](int64_t base, int64_t stride, int64_t len) {
      S gsum = 0;
      for (int64_t k = 0; k < len; ++k) gsum += g[base + k * stride];
      for (int64_t k = 0; k < len; ++k) {
        int64_t i = base + k * stride;
        gx[i] += g[i] - std::exp(y[i]) * gsum;
      }
    });
  });
  return out;
}

#define ACH_INSTANTIATE(S)                                                              \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> div(const Tensor<S>&, const Tensor<S>&);                           \
  template Tensor<S> minimum(const Tensor<S>&, const Tensor<S>&);                       \
  template Tensor<S> maximum(const Tensor<S>&, const Tensor<S>&);                       \
  template Tensor<S> add_scalar(const Tensor<S>&, S);                                   \
  template Tensor<S> mul_scalar(const Tensor<S>&, S);                                   \
  template Tensor<S> neg(const Tensor<S>&);                                             \
  template Tensor<S> exp_op(const Tensor<S>&);                                          \
  template Tensor<S> log_op(const Tensor<S>&);                                          \
  template Tensor<S> sqrt_op(const Tensor<S>&);                                         \
  template Tensor<S> sigmoid(const Tensor<S>&);                                         \
  template Tensor<S> silu(const Tensor<S>&);                                            \
  template Tensor<S> relu(const Tensor<S>&);                                            \
  template Tensor<S> softplus(const Tensor<S>&);                                        \
  template Tensor<S> clamp(const Tensor<S>&, S, S);                                     \
  template Tensor<S> sum(const Tensor<S>&);                                             \
  template Tensor<S> mean(const Tensor<S>&);                                            \
  template Tensor<S> sum_dims(const Tensor<S>&, std::vector<int>, bool);                \
  template Tensor<S> mean_dims(const Tensor<S>&, std::vector<int>, bool);               \
  template Tensor<S> max_dim(const Tensor<S>&, int);                                    \
  template Tensor<S> reshape(const Tensor<S>&, Shape);                                  \
  template Tensor<S> permute(const Tensor<S>&, const std::vector<int>&);                \
  template Tensor<S> concat(const std::vector<Tensor<S>>&, int);                        \
  template Tensor<S> slice(const Tensor<S>&, int, int64_t, int64_t);                    \
  template Tensor<S> gather_rows(const Tensor<S>&, const std::vector<int64_t>&);        \
  template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);                        \
  template Tensor<S> softmax(const Tensor<S>&, int);                                    \
  template Tensor<S> log_softmax(const Tensor<S>&, int);

ACH_INSTANTIATE(float)
ACH_INSTANTIATE(double)
#undef ACH_INSTANTIATE

}  // namespace ach
