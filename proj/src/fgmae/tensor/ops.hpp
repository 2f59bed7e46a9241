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

#pragma once

#include <span>
#include <vector>

#include "fgmae/tensor/autograd.hpp"

namespace fgmae {

// Per-row index lists, e.g. the kept patch ids of every sample in a batch.
struct IndexMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> data;

  std::int64_t at(std::int64_t r, std::int64_t c) const { return data[r * cols + c]; }
};

namespace ag {

// Broadcasting in add/mul is restricted to the common "trailing shape" case:
// b.shape() must equal a suffix of a.shape() (bias, positional embedding,
// per-feature scale).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var square(Var a);
Var broadcast_to(Var a, const Shape& shape);

Var matmul(Var a, Var b);
// Batched product over identical leading axes: [..., m, k] x [..., k, n], or
// [..., n, k] when transpose_b is set.
Var bmm(Var a, Var b, bool transpose_b = false);
// x [..., in] . w [in, out] + b [out]; bias may be an invalid Var.
Var linear(Var x, Var w, Var b);

Var transpose(Var a);
Var permute(Var a, const std::vector<int>& perm);
Var reshape(Var a, const Shape& shape);

// a [B, L, K], index [B, M] -> [B, M, K]
Var gather_rows(Var a, const IndexMatrix& index);
// a [B, M, K] -> [B, length, K] with rows placed at index, zeros elsewhere.
Var scatter_rows(Var a, const IndexMatrix& index, std::int64_t length);
Var concat(std::span<const Var> parts, int axis);
Var slice(Var a, int axis, std::int64_t start, std::int64_t length);

Var sum(Var a);
Var mean(Var a);
Var sum_axis(Var a, int axis);
Var mean_axis(Var a, int axis);

Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-6);
// Exact x * Phi(x) using erf.
Var gelu(Var x);
// Last-axis softmax with max subtraction.
Var softmax(Var x);

// Mean of squared differences over all elements.
Var mse(Var pred, Var target);
// Mean over rows of -sum_k t_k log softmax(x)_k; targets may be soft.
Var soft_cross_entropy(Var logits, Var targets);
// Mean over all entries of the logistic loss (multi-label soft margin).
Var bce_with_logits(Var logits, Var targets);

}  // namespace ag

namespace kernels {

// C[m x n] (+)= op(A) op(B), row-major. With trans_a, A is stored k x m; with
// trans_b, B is stored n x k.
template <class T>
void gemm(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n,
          bool trans_a, bool trans_b, bool accumulate);

}  // namespace kernels

}  // namespace fgmae
