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

#include <cstdint>
#include <vector>

#include "fgmae/core/error.hpp"
#include "fgmae/tensor/tensor.hpp"

namespace fgmae::detail {

// Double-precision copy of a B x C x H x W tensor.
struct Raster {
  std::int64_t b = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  explicit Raster(const Tensor& t, const char* op) {
    require(t.rank() == 4, ErrorKind::Shape, std::string(op) + " expects B x C x H x W, got " + shape_str(t.shape()));
    b = t.dim(0);
    c = t.dim(1);
    h = t.dim(2);
    w = t.dim(3);
    v = t.to_vector();
  }

  const double* plane(std::int64_t n, std::int64_t ch) const { return v.data() + (n * c + ch) * h * w; }
};

inline std::int64_t clamp_index(std::int64_t i, std::int64_t n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

}  // namespace fgmae::detail
