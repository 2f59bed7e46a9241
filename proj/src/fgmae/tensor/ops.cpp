/*
 * Copyright 2026 The fgmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fgmae/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fgmae {

namespace kernels {

template <class T>
void gemm(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
          bool trans_a, bool trans_b, bool accumulate) {
  std::vector<T> bt;
  if (trans_b) {
    bt.resize(static_cast<std::size_t>(k * n));
    for (std::int64_t j = 0; j < n; ++j) {
      for (std::int64_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    }
    b = bt.data();
  }
  if (!accumulate) std::fill(c, c + m * n, T(0));
  if (!trans_a) {
    for (std::int64_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      const T* arow = a + i * k;
      for (std::int64_t p = 0; p < k; ++p) {
        const T av = arow[p];
        const T* brow = b + p * n;
        for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  } else {
    for (std::int64_t i = 0; i < m; ++i) {
      T* crow = c + i * n;
      for (std::int64_t p = 0; p < k; ++p) {
        const T av = a[p * m + i];
        const T* brow = b + p * n;
        for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

template void gemm<float>(const float*, const float*, float*, std::int64_t, std::int64_t,
                          std::int64_t, bool, bool, bool);
template void gemm<double>(const double*, const double*, double*, std::int64_t, std::int64_t,
                           std::int64_t, bool, bool, bool);

}  // namespace kernels

namespace ag {
namespace {

Tape* tape_of(Var a) {
  require(a.valid(), ErrorKind::Internal, "op on an unbound Var");
  return a.tape();
}

void same_dtype(Var a, Var b, const char* op) {
  require(a.dtype() == b.dtype(), ErrorKind::Shape,
          std::string(op) + ": dtype mismatch " + dtype_name(a.dtype()) + " vs " +
              dtype_name(b.dtype()));
}

// Number of leading elements when `inner` is a trailing suffix of `outer`.
std::int64_t suffix_repeat(const Shape& outer, const Shape& inner, const char* op) {
  bool ok = inner.size() <= outer.size() &&
            std::equal(inner.begin(), inner.end(), outer.end() - inner.size());
  require(ok, ErrorKind::Shape,
          std::string(op) + ": shape " + shape_str(inner) + " is not a suffix of " +
              shape_str(outer));
  std::int64_t in = shape_numel(inner);
  return in == 0 ? 0 : shape_numel(outer) / in;
}

// Sums g [outer, inner] over the outer axis.
Tensor reduce_leading(const Tensor& g, const Shape& inner_shape) {
  std::int64_t inner = shape_numel(inner_shape);
  std::int64_t outer = inner == 0 ? 0 : g.numel() / inner;
  return visit_dtype(g.dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<double> acc(static_cast<std::size_t>(inner), 0.0);
    auto gd = g.data<T>();
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t i = 0; i < inner; ++i) acc[i] += gd[o * inner + i];
    }
    return Tensor::from_values(inner_shape, acc, g.dtype());
  });
}

int norm_axis(int axis, int rank) {
  if (axis < 0) axis += rank;
  require(axis >= 0 && axis < rank, ErrorKind::Shape, "axis out of range");
  return axis;
}

Tensor permute_tensor(const Tensor& x, const std::vector<int>& perm) {
  const int r = x.rank();
  Shape out_shape(r);
  auto in_strides = strides_of(x.shape());
  std::vector<std::int64_t> src_stride(r);
  for (int i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[perm[i]];
    src_stride[i] = in_strides[perm[i]];
  }
  return visit_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor out = Tensor::zeros(out_shape, x.dtype());
    auto src = x.data<T>();
    auto dst = out.mutable_data<T>();
    if (dst.empty()) return out;
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t off = 0;
    const std::int64_t inner = r ? out_shape[r - 1] : 1;
    const std::int64_t inner_stride = r ? src_stride[r - 1] : 0;
    std::int64_t n = 0;
    const std::int64_t total = out.numel();
    while (n < total) {
      for (std::int64_t j = 0; j < inner; ++j) dst[n++] = src[off + j * inner_stride];
      for (int ax = r - 2; ax >= 0; --ax) {
        if (++idx[ax] < out_shape[ax]) {
          off += src_stride[ax];
          break;
        }
        off -= src_stride[ax] * (out_shape[ax] - 1);
        idx[ax] = 0;
      }
    }
    return out;
  });
}

Tensor gather_tensor(const Tensor& a, const IndexMatrix& index) {
  const std::int64_t B = a.dim(0), L = a.dim(1), K = a.dim(2);
  require(index.rows == B, ErrorKind::Shape, "gather_rows: batch mismatch");
  return visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor out = Tensor::zeros({B, index.cols, K}, a.dtype());
    auto src = a.data<T>();
    auto dst = out.mutable_data<T>();
    for (std::int64_t b = 0; b < B; ++b) {
      for (std::int64_t m = 0; m < index.cols; ++m) {
        std::int64_t row = index.at(b, m);
        require(row >= 0 && row < L, ErrorKind::Shape, "gather_rows: index out of range");
        std::copy_n(src.data() + (b * L + row) * K, K, dst.data() + (b * index.cols + m) * K);
      }
    }
    return out;
  });
}

Tensor scatter_tensor(const Tensor& a, const IndexMatrix& index, std::int64_t length) {
  const std::int64_t B = a.dim(0), M = a.dim(1), K = a.dim(2);
  require(index.rows == B && index.cols == M, ErrorKind::Shape, "scatter_rows: index shape mismatch");
  return visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor out = Tensor::zeros({B, length, K}, a.dtype());
    auto src = a.data<T>();
    auto dst = out.mutable_data<T>();
    for (std::int64_t b = 0; b < B; ++b) {
      for (std::int64_t m = 0; m < M; ++m) {
        std::int64_t row = index.at(b, m);
        require(row >= 0 && row < length, ErrorKind::Shape, "scatter_rows: index out of range");
        T* d = dst.data() + (b * length + row) * K;
        const T* s = src.data() + (b * M + m) * K;
        for (std::int64_t k = 0; k < K; ++k) d[k] += s[k];
      }
    }
    return out;
  });
}

template <class F>
Tensor map_unary(const Tensor& x, F f) {
  return visit_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor out = Tensor::zeros(x.shape(), x.dtype());
    auto s = x.data<T>();
    auto d = out.mutable_data<T>();
    for (std::size_t i = 0; i < s.size(); ++i) d[i] = static_cast<T>(f(static_cast<double>(s[i])));
    return out;
  });
}

Tensor scale_tensor(const Tensor& x, double s) {
  return visit_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor out = Tensor::zeros(x.shape(), x.dtype());
    auto src = x.data<T>();
    auto d = out.mutable_data<T>();
    const T ts = static_cast<T>(s);
    for (std::size_t i = 0; i < src.size(); ++i) d[i] = src[i] * ts;
    return out;
  });
}

Tensor broadcast_tensor(const Tensor& a, const Shape& shape) {
  std::int64_t rep = suffix_repeat(shape, a.shape(), "broadcast_to");
  return visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor out = Tensor::zeros(shape, a.dtype());
    auto s = a.data<T>();
    auto d = out.mutable_data<T>();
    for (std::int64_t r = 0; r < rep; ++r) std::copy(s.begin(), s.end(), d.begin() + r * s.size());
    return out;
  });
}

}  // namespace

Var add(Var a, Var b) {
  same_dtype(a, b, "add");
  const Shape& bs = b.shape();
  std::int64_t rep = suffix_repeat(a.shape(), bs, "add");
  Tensor out = visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = Tensor::zeros(a.shape(), a.dtype());
    auto x = a.value().data<T>();
    auto y = b.value().data<T>();
    auto d = o.mutable_data<T>();
    const std::size_t inner = y.size();
    for (std::int64_t r = 0; r < rep; ++r) {
      for (std::size_t i = 0; i < inner; ++i) d[r * inner + i] = x[r * inner + i] + y[i];
    }
    return o;
  });
  Shape b_shape = bs;
  return tape_of(a)->record("add", std::move(out), {a, b}, [b_shape](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    if (ctx.needs(0)) ctx.accumulate(0, g);
    if (ctx.needs(1)) {
      ctx.accumulate(1, g.shape() == b_shape ? g : reduce_leading(g, b_shape));
    }
  });
}

Var sub(Var a, Var b) {
  same_dtype(a, b, "sub");
  return add(a, scale(b, -1.0));
}

Var mul(Var a, Var b) {
  same_dtype(a, b, "mul");
  std::int64_t rep = suffix_repeat(a.shape(), b.shape(), "mul");
  Tensor out = visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = Tensor::zeros(a.shape(), a.dtype());
    auto x = a.value().data<T>();
    auto y = b.value().data<T>();
    auto d = o.mutable_data<T>();
    const std::size_t inner = y.size();
    for (std::int64_t r = 0; r < rep; ++r) {
      for (std::size_t i = 0; i < inner; ++i) d[r * inner + i] = x[r * inner + i] * y[i];
    }
    return o;
  });
  return tape_of(a)->record("mul", std::move(out), {a, b}, [rep](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    const Tensor& x = ctx.input(0);
    const Tensor& y = ctx.input(1);
    visit_dtype(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto gd = g.data<T>();
      auto xd = x.data<T>();
      auto yd = y.data<T>();
      const std::size_t inner = yd.size();
      if (ctx.needs(0)) {
        Tensor dx = Tensor::zeros(x.shape(), x.dtype());
        auto dd = dx.mutable_data<T>();
        for (std::int64_t r = 0; r < rep; ++r) {
          for (std::size_t i = 0; i < inner; ++i) dd[r * inner + i] = gd[r * inner + i] * yd[i];
        }
        ctx.accumulate(0, std::move(dx));
      }
      if (ctx.needs(1)) {
        std::vector<double> acc(inner, 0.0);
        for (std::int64_t r = 0; r < rep; ++r) {
          for (std::size_t i = 0; i < inner; ++i) acc[i] += gd[r * inner + i] * xd[r * inner + i];
        }
        ctx.accumulate(1, Tensor::from_values(y.shape(), acc, y.dtype()));
      }
    });
  });
}

Var scale(Var a, double s) {
  return tape_of(a)->record("scale", scale_tensor(a.value(), s), {a}, [s](BackwardContext& ctx) {
    ctx.accumulate(0, scale_tensor(ctx.grad_output(), s));
  });
}

Var square(Var a) { return mul(a, a); }

Var broadcast_to(Var a, const Shape& shape) {
  Shape in_shape = a.shape();
  return tape_of(a)->record("broadcast_to", broadcast_tensor(a.value(), shape), {a},
                            [in_shape](BackwardContext& ctx) {
                              ctx.accumulate(0, reduce_leading(ctx.grad_output(), in_shape));
                            });
}

Var bmm(Var a, Var b, bool transpose_b) {
  same_dtype(a, b, "bmm");
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require(as.size() >= 2 && as.size() == bs.size(), ErrorKind::Shape,
          "bmm: rank mismatch " + shape_str(as) + " x " + shape_str(bs));
  require(std::equal(as.begin(), as.end() - 2, bs.begin()), ErrorKind::Shape,
          "bmm: leading dims differ " + shape_str(as) + " x " + shape_str(bs));
  const std::int64_t m = as[as.size() - 2], k = as.back();
  const std::int64_t bk = transpose_b ? bs.back() : bs[bs.size() - 2];
  const std::int64_t n = transpose_b ? bs[bs.size() - 2] : bs.back();
  require(k == bk, ErrorKind::Shape,
          "bmm: inner dims disagree " + shape_str(as) + " x " + shape_str(bs));
  Shape out_shape(as.begin(), as.end() - 2);
  const std::int64_t batch = shape_numel(out_shape);
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out = visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = Tensor::zeros(out_shape, a.dtype());
    auto ad = a.value().data<T>();
    auto bd = b.value().data<T>();
    auto od = o.mutable_data<T>();
    for (std::int64_t i = 0; i < batch; ++i) {
      kernels::gemm<T>(ad.data() + i * m * k, bd.data() + i * k * n, od.data() + i * m * n, m, k,
                       n, false, transpose_b, false);
    }
    return o;
  });
  return tape_of(a)->record(
      "bmm", std::move(out), {a, b}, [=](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_output();
        const Tensor& x = ctx.input(0);
        const Tensor& y = ctx.input(1);
        visit_dtype(g.dtype(), [&](auto tag) {
          using T = decltype(tag);
          auto gd = g.data<T>();
          auto xd = x.data<T>();
          auto yd = y.data<T>();
          if (ctx.needs(0)) {
            Tensor dx = Tensor::zeros(x.shape(), x.dtype());
            auto dd = dx.mutable_data<T>();
            for (std::int64_t i = 0; i < batch; ++i) {
              // dA = dC op(B)^T
              kernels::gemm<T>(gd.data() + i * m * n, yd.data() + i * k * n, dd.data() + i * m * k,
                               m, n, k, false, !transpose_b, false);
            }
            ctx.accumulate(0, std::move(dx));
          }
          if (ctx.needs(1)) {
            Tensor dy = Tensor::zeros(y.shape(), y.dtype());
            auto dd = dy.mutable_data<T>();
            for (std::int64_t i = 0; i < batch; ++i) {
              if (!transpose_b) {
                // dB = A^T dC
                kernels::gemm<T>(xd.data() + i * m * k, gd.data() + i * m * n,
                                 dd.data() + i * k * n, k, m, n, true, false, false);
              } else {
                // B stored n x k: dB = dC^T A
                kernels::gemm<T>(gd.data() + i * m * n, xd.data() + i * m * k,
                                 dd.data() + i * k * n, n, m, k, true, false, false);
              }
            }
            ctx.accumulate(1, std::move(dy));
          }
        });
      });
}

Var matmul(Var a, Var b) {
  require(a.value().rank() == 2 && b.value().rank() == 2, ErrorKind::Shape,
          "matmul expects 2-D operands, got " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  return bmm(a, b, false);
}

Var linear(Var x, Var w, Var b) {
  same_dtype(x, w, "linear");
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  require(ws.size() == 2 && !xs.empty() && xs.back() == ws[0], ErrorKind::Shape,
          "linear: input " + shape_str(xs) + " does not match weight " + shape_str(ws));
  const std::int64_t in = ws[0], out_dim = ws[1];
  const std::int64_t rows = in == 0 ? 0 : x.value().numel() / in;
  Shape out_shape = xs;
  out_shape.back() = out_dim;
  const bool has_bias = b.valid();
  if (has_bias) {
    require(b.shape() == Shape{out_dim}, ErrorKind::Shape,
            "linear: bias shape " + shape_str(b.shape()) + " != (" + std::to_string(out_dim) + ")");
  }
  Tensor out = visit_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = Tensor::zeros(out_shape, x.dtype());
    auto od = o.mutable_data<T>();
    if (has_bias) {
      auto bd = b.value().data<T>();
      for (std::int64_t r = 0; r < rows; ++r) std::copy(bd.begin(), bd.end(), od.begin() + r * out_dim);
    }
    kernels::gemm<T>(x.value().data<T>().data(), w.value().data<T>().data(), od.data(), rows, in,
                     out_dim, false, false, true);
    return o;
  });
  std::vector<Var> inputs{x, w};
  if (has_bias) inputs.push_back(b);
  return tape_of(x)->record(
      "linear", std::move(out), std::move(inputs), [=](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_output();
        const Tensor& xv = ctx.input(0);
        const Tensor& wv = ctx.input(1);
        visit_dtype(g.dtype(), [&](auto tag) {
          using T = decltype(tag);
          auto gd = g.data<T>();
          if (ctx.needs(0)) {
            Tensor dx = Tensor::zeros(xv.shape(), xv.dtype());
            kernels::gemm<T>(gd.data(), wv.data<T>().data(), dx.mutable_data<T>().data(), rows,
                             out_dim, in, false, true, false);
            ctx.accumulate(0, std::move(dx));
          }
          if (ctx.needs(1)) {
            Tensor dw = Tensor::zeros(wv.shape(), wv.dtype());
            kernels::gemm<T>(xv.data<T>().data(), gd.data(), dw.mutable_data<T>().data(), in, rows,
                             out_dim, true, false, false);
            ctx.accumulate(1, std::move(dw));
          }
          if (has_bias && ctx.needs(2)) {
            ctx.accumulate(2, reduce_leading(g, Shape{out_dim}));
          }
        });
      });
}

Var permute(Var a, const std::vector<int>& perm) {
  const int r = a.value().rank();
  require(static_cast<int>(perm.size()) == r, ErrorKind::Shape, "permute: rank mismatch");
  std::vector<int> inverse(r, -1);
  for (int i = 0; i < r; ++i) {
    require(perm[i] >= 0 && perm[i] < r && inverse[perm[i]] == -1, ErrorKind::Shape,
            "permute: not a permutation");
    inverse[perm[i]] = i;
  }
  return tape_of(a)->record("permute", permute_tensor(a.value(), perm), {a},
                            [inverse](BackwardContext& ctx) {
                              ctx.accumulate(0, permute_tensor(ctx.grad_output(), inverse));
                            });
}

Var transpose(Var a) {
  const int r = a.value().rank();
  require(r >= 2, ErrorKind::Shape, "transpose needs rank >= 2");
  std::vector<int> perm(r);
  for (int i = 0; i < r; ++i) perm[i] = i;
  std::swap(perm[r - 1], perm[r - 2]);
  return permute(a, perm);
}

Var reshape(Var a, const Shape& shape) {
  Shape in_shape = a.shape();
  return tape_of(a)->record("reshape", a.value().reshape(shape), {a},
                            [in_shape](BackwardContext& ctx) {
                              ctx.accumulate(0, ctx.grad_output().reshape(in_shape));
                            });
}

Var gather_rows(Var a, const IndexMatrix& index) {
  require(a.value().rank() == 3, ErrorKind::Shape, "gather_rows expects [B, L, K]");
  const std::int64_t length = a.shape()[1];
  return tape_of(a)->record("gather_rows", gather_tensor(a.value(), index), {a},
                            [index, length](BackwardContext& ctx) {
                              ctx.accumulate(0, scatter_tensor(ctx.grad_output(), index, length));
                            });
}

Var scatter_rows(Var a, const IndexMatrix& index, std::int64_t length) {
  require(a.value().rank() == 3, ErrorKind::Shape, "scatter_rows expects [B, M, K]");
  return tape_of(a)->record("scatter_rows", scatter_tensor(a.value(), index, length), {a},
                            [index](BackwardContext& ctx) {
                              ctx.accumulate(0, gather_tensor(ctx.grad_output(), index));
                            });
}

Var concat(std::span<const Var> parts, int axis) {
  require(!parts.empty(), ErrorKind::Shape, "concat of zero tensors");
  const Shape& first = parts[0].shape();
  axis = norm_axis(axis, static_cast<int>(first.size()));
  std::vector<std::int64_t> lens;
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    same_dtype(parts[0], p, "concat");
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (static_cast<int>(i) != axis && s[i] != first[i]) ok = false;
    }
    require(ok, ErrorKind::Shape, "concat: incompatible shapes " + shape_str(first) + " and " + shape_str(s));
    lens.push_back(s[axis]);
    out_shape[axis] += s[axis];
  }
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
  const std::int64_t total = out_shape[axis];
  Tensor out = visit_dtype(parts[0].dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = Tensor::zeros(out_shape, parts[0].dtype());
    auto d = o.mutable_data<T>();
    std::int64_t offset = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
      auto s = parts[pi].value().data<T>();
      const std::int64_t chunk = lens[pi] * inner;
      for (std::int64_t o2 = 0; o2 < outer; ++o2) {
        std::copy_n(s.data() + o2 * chunk, chunk, d.data() + o2 * total * inner + offset * inner);
      }
      offset += lens[pi];
    }
    return o;
  });
  std::vector<Var> inputs(parts.begin(), parts.end());
  return tape_of(parts[0])->record(
      "concat", std::move(out), std::move(inputs), [=](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_output();
        visit_dtype(g.dtype(), [&](auto tag) {
          using T = decltype(tag);
          auto gd = g.data<T>();
          std::int64_t offset = 0;
          for (std::size_t pi = 0; pi < lens.size(); ++pi) {
            if (ctx.needs(static_cast<int>(pi))) {
              Tensor dp = Tensor::zeros(ctx.input(static_cast<int>(pi)).shape(), g.dtype());
              auto dd = dp.mutable_data<T>();
              const std::int64_t chunk = lens[pi] * inner;
              for (std::int64_t o2 = 0; o2 < outer; ++o2) {
                std::copy_n(gd.data() + o2 * total * inner + offset * inner, chunk,
                            dd.data() + o2 * chunk);
              }
              ctx.accumulate(static_cast<int>(pi), std::move(dp));
            }
            offset += lens[pi];
          }
        });
      });
}

Var slice(Var a, int axis, std::int64_t start, std::int64_t length) {
  const Shape& s = a.shape();
  axis = norm_axis(axis, static_cast<int>(s.size()));
  require(start >= 0 && length >= 0 && start + length <= s[axis], ErrorKind::Shape,
          "slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
              ") out of range for " + shape_str(s));
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::int64_t full = s[axis];
  Shape out_shape = s;
  out_shape[axis] = length;
  Tensor out = visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    Tensor o = Tensor::zeros(out_shape, a.dtype());
    auto src = a.value().data<T>();
    auto d = o.mutable_data<T>();
    for (std::int64_t o2 = 0; o2 < outer; ++o2) {
      std::copy_n(src.data() + (o2 * full + start) * inner, length * inner,
                  d.data() + o2 * length * inner);
    }
    return o;
  });
  Shape in_shape = s;
  return tape_of(a)->record("slice", std::move(out), {a}, [=](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    visit_dtype(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      Tensor da = Tensor::zeros(in_shape, g.dtype());
      auto dd = da.mutable_data<T>();
      auto gd = g.data<T>();
      for (std::int64_t o2 = 0; o2 < outer; ++o2) {
        std::copy_n(gd.data() + o2 * length * inner, length * inner,
                    dd.data() + (o2 * full + start) * inner);
      }
      ctx.accumulate(0, std::move(da));
    });
  });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double acc = 0.0;
  for (double v : x.to_vector()) acc += v;
  Shape in_shape = x.shape();
  return tape_of(a)->record("sum", Tensor::scalar(acc, x.dtype()), {a},
                            [in_shape](BackwardContext& ctx) {
                              const Tensor& g = ctx.grad_output();
                              ctx.accumulate(0, Tensor::full(in_shape, g.item(), g.dtype()));
                            });
}

Var mean(Var a) {
  const std::int64_t n = a.value().numel();
  require(n > 0, ErrorKind::Shape, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum_axis(Var a, int axis) {
  const Shape& s = a.shape();
  axis = norm_axis(axis, static_cast<int>(s.size()));
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::int64_t len = s[axis];
  Shape out_shape = s;
  out_shape.erase(out_shape.begin() + axis);
  Tensor out = visit_dtype(a.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = a.value().data<T>();
    std::vector<double> acc(static_cast<std::size_t>(outer * inner), 0.0);
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t l = 0; l < len; ++l) {
        const T* row = src.data() + (o * len + l) * inner;
        for (std::int64_t i = 0; i < inner; ++i) acc[o * inner + i] += row[i];
      }
    }
    return Tensor::from_values(out_shape, acc, a.dtype());
  });
  Shape in_shape = s;
  return tape_of(a)->record("sum_axis", std::move(out), {a}, [=](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    visit_dtype(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      Tensor da = Tensor::zeros(in_shape, g.dtype());
      auto dd = da.mutable_data<T>();
      auto gd = g.data<T>();
      for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t l = 0; l < len; ++l) {
          std::copy_n(gd.data() + o * inner, inner, dd.data() + (o * len + l) * inner);
        }
      }
      ctx.accumulate(0, std::move(da));
    });
  });
}

Var mean_axis(Var a, int axis) {
  const std::int64_t len = a.value().dim(axis);
  require(len > 0, ErrorKind::Shape, "mean over empty axis");
  return scale(sum_axis(a, axis), 1.0 / static_cast<double>(len));
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  same_dtype(x, gamma, "layer_norm");
  same_dtype(x, beta, "layer_norm");
  const Shape& s = x.shape();
  require(!s.empty() && s.back() > 0, ErrorKind::Shape, "layer_norm: empty last axis");
  const std::int64_t d = s.back();
  require(gamma.shape() == Shape{d} && beta.shape() == Shape{d}, ErrorKind::Shape,
          "layer_norm: affine params must have shape (" + std::to_string(d) + ")");
  const std::int64_t rows = x.value().numel() / d;
  Tensor xhat = Tensor::zeros(s, Dtype::F64);
  std::vector<double> rstd(static_cast<std::size_t>(rows));
  Tensor out = visit_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xd = x.value().data<T>();
    auto gd = gamma.value().data<T>();
    auto bd = beta.value().data<T>();
    auto xh = xhat.mutable_data<double>();
    Tensor o = Tensor::zeros(s, x.dtype());
    auto od = o.mutable_data<T>();
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* row = xd.data() + r * d;
      double mu = 0.0;
      for (std::int64_t i = 0; i < d; ++i) mu += row[i];
      mu /= static_cast<double>(d);
      double var = 0.0;
      for (std::int64_t i = 0; i < d; ++i) {
        double c = row[i] - mu;
        var += c * c;
      }
      var /= static_cast<double>(d);
      const double rs = 1.0 / std::sqrt(var + eps);
      rstd[r] = rs;
      for (std::int64_t i = 0; i < d; ++i) {
        double h = (row[i] - mu) * rs;
        xh[r * d + i] = h;
        od[r * d + i] = static_cast<T>(h * gd[i] + bd[i]);
      }
    }
    return o;
  });
  return tape_of(x)->record(
      "layer_norm", std::move(out), {x, gamma, beta}, [=](BackwardContext& ctx) {
        const Tensor& g = ctx.grad_output();
        auto xh = xhat.data<double>();
        visit_dtype(g.dtype(), [&](auto tag) {
          using T = decltype(tag);
          auto gd = g.data<T>();
          auto gam = ctx.input(1).data<T>();
          std::vector<double> dgamma(d, 0.0), dbeta(d, 0.0);
          Tensor dx = Tensor::zeros(s, g.dtype());
          auto dxd = dx.mutable_data<T>();
          std::vector<double> dxhat(d);
          for (std::int64_t r = 0; r < rows; ++r) {
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (std::int64_t i = 0; i < d; ++i) {
              const double gi = gd[r * d + i];
              const double h = xh[r * d + i];
              dgamma[i] += gi * h;
              dbeta[i] += gi;
              dxhat[i] = gi * gam[i];
              mean_dxh += dxhat[i];
              mean_dxh_xh += dxhat[i] * h;
            }
            mean_dxh /= static_cast<double>(d);
            mean_dxh_xh /= static_cast<double>(d);
            for (std::int64_t i = 0; i < d; ++i) {
              dxd[r * d + i] = static_cast<T>(
                  rstd[r] * (dxhat[i] - mean_dxh - xh[r * d + i] * mean_dxh_xh));
            }
          }
          if (ctx.needs(0)) ctx.accumulate(0, std::move(dx));
          if (ctx.needs(1)) ctx.accumulate(1, Tensor::from_values({d}, dgamma, g.dtype()));
          if (ctx.needs(2)) ctx.accumulate(2, Tensor::from_values({d}, dbeta, g.dtype()));
        });
      });
}

Var gelu(Var x) {
  auto cdf = [](double v) { return 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)); };
  Tensor out = map_unary(x.value(), [&](double v) { return v * cdf(v); });
  return tape_of(x)->record("gelu", std::move(out), {x}, [cdf](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    const Tensor& xv = ctx.input(0);
    visit_dtype(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto gd = g.data<T>();
      auto xd = xv.data<T>();
      Tensor dx = Tensor::zeros(xv.shape(), xv.dtype());
      auto dd = dx.mutable_data<T>();
      const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
      for (std::size_t i = 0; i < dd.size(); ++i) {
        const double v = xd[i];
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        dd[i] = static_cast<T>(gd[i] * (cdf(v) + v * pdf));
      }
      ctx.accumulate(0, std::move(dx));
    });
  });
}

Var softmax(Var x) {
  const Shape& s = x.shape();
  require(!s.empty() && s.back() >= 1, ErrorKind::Shape, "softmax: empty last axis");
  const std::int64_t n = s.back();
  const std::int64_t rows = x.value().numel() / n;
  Tensor out = visit_dtype(x.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto xd = x.value().data<T>();
    Tensor o = Tensor::zeros(s, x.dtype());
    auto od = o.mutable_data<T>();
    std::vector<double> e(n);
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* row = xd.data() + r * n;
      T mx = row[0];
      for (std::int64_t i = 1; i < n; ++i) mx = std::max(mx, row[i]);
      double z = 0.0;
      for (std::int64_t i = 0; i < n; ++i) {
        e[i] = std::exp(static_cast<double>(row[i] - mx));
        z += e[i];
      }
      for (std::int64_t i = 0; i < n; ++i) od[r * n + i] = static_cast<T>(e[i] / z);
    }
    return o;
  });
  return tape_of(x)->record("softmax", std::move(out), {x}, [n, rows](BackwardContext& ctx) {
    const Tensor& g = ctx.grad_output();
    const Tensor& y = ctx.output();
    visit_dtype(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto gd = g.data<T>();
      auto yd = y.data<T>();
      Tensor dx = Tensor::zeros(y.shape(), y.dtype());
      auto dd = dx.mutable_data<T>();
      for (std::int64_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::int64_t i = 0; i < n; ++i) dot += static_cast<double>(gd[r * n + i]) * yd[r * n + i];
        for (std::int64_t i = 0; i < n; ++i) {
          dd[r * n + i] = static_cast<T>(yd[r * n + i] * (gd[r * n + i] - dot));
        }
      }
      ctx.accumulate(0, std::move(dx));
    });
  });
}

Var mse(Var pred, Var target) {
  require(pred.shape() == target.shape(), ErrorKind::Shape,
          "mse: shapes differ " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  return mean(square(sub(pred, target)));
}

Var soft_cross_entropy(Var logits, Var targets) {
  same_dtype(logits, targets, "soft_cross_entropy");
  const Shape& s = logits.shape();
  require(s.size() == 2 && targets.shape() == s, ErrorKind::Shape,
          "soft_cross_entropy expects matching [N, K] logits and targets");
  const std::int64_t N = s[0], K = s[1];
  require(N > 0 && K > 0, ErrorKind::Shape, "soft_cross_entropy on empty batch");
  auto x = logits.value().to_vector();
  auto t = targets.value().to_vector();
  std::vector<double> probs(x.size());
  double loss = 0.0;
  for (std::int64_t r = 0; r < N; ++r) {
    double mx = x[r * K];
    for (std::int64_t k = 1; k < K; ++k) mx = std::max(mx, x[r * K + k]);
    double z = 0.0;
    for (std::int64_t k = 0; k < K; ++k) z += std::exp(x[r * K + k] - mx);
    const double lz = std::log(z) + mx;
    for (std::int64_t k = 0; k < K; ++k) {
      probs[r * K + k] = std::exp(x[r * K + k] - lz);
      loss -= t[r * K + k] * (x[r * K + k] - lz);
    }
  }
  loss /= static_cast<double>(N);
  Dtype dt = logits.dtype();
  return tape_of(logits)->record(
      "soft_cross_entropy", Tensor::scalar(loss, dt), {logits, targets},
      [=](BackwardContext& ctx) {
        const double g = ctx.grad_output().item() / static_cast<double>(N);
        if (ctx.needs(0)) {
          std::vector<double> dx(x.size());
          for (std::int64_t r = 0; r < N; ++r) {
            double tsum = 0.0;
            for (std::int64_t k = 0; k < K; ++k) tsum += t[r * K + k];
            for (std::int64_t k = 0; k < K; ++k) {
              dx[r * K + k] = g * (probs[r * K + k] * tsum - t[r * K + k]);
            }
          }
          ctx.accumulate(0, Tensor::from_values(s, dx, dt));
        }
        if (ctx.needs(1)) {
          std::vector<double> dt_grad(x.size());
          for (std::int64_t r = 0; r < N; ++r) {
            for (std::int64_t k = 0; k < K; ++k) {
              dt_grad[r * K + k] = -g * std::log(std::max(probs[r * K + k], 1e-300));
            }
          }
          ctx.accumulate(1, Tensor::from_values(s, dt_grad, dt));
        }
      });
}

Var bce_with_logits(Var logits, Var targets) {
  same_dtype(logits, targets, "bce_with_logits");
  require(logits.shape() == targets.shape(), ErrorKind::Shape,
          "bce_with_logits: shape mismatch");
  auto x = logits.value().to_vector();
  auto t = targets.value().to_vector();
  require(!x.empty(), ErrorKind::Shape, "bce_with_logits on empty tensor");
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    loss += std::max(x[i], 0.0) - x[i] * t[i] + std::log1p(std::exp(-std::abs(x[i])));
  }
  const double n = static_cast<double>(x.size());
  loss /= n;
  Shape s = logits.shape();
  Dtype dt = logits.dtype();
  return tape_of(logits)->record(
      "bce_with_logits", Tensor::scalar(loss, dt), {logits, targets}, [=](BackwardContext& ctx) {
        const double g = ctx.grad_output().item() / n;
        if (ctx.needs(0)) {
          std::vector<double> dx(x.size());
          for (std::size_t i = 0; i < x.size(); ++i) {
            dx[i] = g * (1.0 / (1.0 + std::exp(-x[i])) - t[i]);
          }
          ctx.accumulate(0, Tensor::from_values(s, dx, dt));
        }
        if (ctx.needs(1)) {
          std::vector<double> dtg(x.size());
          for (std::size_t i = 0; i < x.size(); ++i) dtg[i] = -g * x[i];
          ctx.accumulate(1, Tensor::from_values(s, dtg, dt));
        }
      });
}

}  // namespace ag
}  // namespace fgmae
