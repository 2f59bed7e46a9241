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

#include "fgmae/model/patchify.hpp"

#include <string>

#include "fgmae/core/error.hpp"

namespace fgmae {

PatchGrid patch_grid(std::int64_t height, std::int64_t width, int patch) {
  require(patch >= 1, ErrorKind::InvalidArgument, "patch size must be positive");
  require(height % patch == 0 && width % patch == 0, ErrorKind::Geometry,
          "image " + std::to_string(height) + "x" + std::to_string(width) + " is not divisible by patch size " +
              std::to_string(patch));
  return {height / patch, width / patch};
}

Tensor patchify(const Tensor& images, int patch) {
  require(images.rank() == 4, ErrorKind::Shape, "patchify expects B x C x H x W, got " + shape_str(images.shape()));
  const auto b = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  const PatchGrid g = patch_grid(h, w, patch);
  const std::int64_t p = patch, k = p * p * c;
  return visit_dtype(images.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = images.data<T>();
    std::vector<T> out(static_cast<std::size_t>(images.numel()));
    for (std::int64_t n = 0; n < b; ++n) {
      for (std::int64_t gy = 0; gy < g.rows; ++gy) {
        for (std::int64_t gx = 0; gx < g.cols; ++gx) {
          T* dst = out.data() + (n * g.count() + gy * g.cols + gx) * k;
          for (std::int64_t ch = 0; ch < c; ++ch) {
            for (std::int64_t y = 0; y < p; ++y) {
              const T* row = src.data() + ((n * c + ch) * h + gy * p + y) * w + gx * p;
              for (std::int64_t x = 0; x < p; ++x) *dst++ = row[x];
            }
          }
        }
      }
    }
    return Tensor::from_vector({b, g.count(), k}, std::move(out));
  });
}

Tensor unpatchify(const Tensor& patches, int patch, std::int64_t channels, const PatchGrid& grid) {
  require(patches.rank() == 3, ErrorKind::Shape, "unpatchify expects B x L x K");
  const std::int64_t p = patch, k = p * p * channels;
  require(patches.dim(1) == grid.count() && patches.dim(2) == k, ErrorKind::Shape,
          "patch tensor " + shape_str(patches.shape()) + " does not match the grid");
  const auto b = patches.dim(0), h = grid.rows * p, w = grid.cols * p;
  return visit_dtype(patches.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = patches.data<T>();
    std::vector<T> out(static_cast<std::size_t>(patches.numel()));
    for (std::int64_t n = 0; n < b; ++n) {
      for (std::int64_t gy = 0; gy < grid.rows; ++gy) {
        for (std::int64_t gx = 0; gx < grid.cols; ++gx) {
          const T* from = src.data() + (n * grid.count() + gy * grid.cols + gx) * k;
          for (std::int64_t ch = 0; ch < channels; ++ch) {
            for (std::int64_t y = 0; y < p; ++y) {
              T* row = out.data() + ((n * channels + ch) * h + gy * p + y) * w + gx * p;
              for (std::int64_t x = 0; x < p; ++x) row[x] = *from++;
            }
          }
        }
      }
    }
    return Tensor::from_vector({b, channels, h, w}, std::move(out));
  });
}

}  // namespace fgmae
