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

#include <cmath>
#include <numbers>

#include "fgmae/features/features.hpp"
#include "fgmae/features/raster.hpp"

namespace fgmae {

void HogParams::validate() const {
  require(n_bins >= 2, ErrorKind::Config, "HOG needs at least two bins");
  require(cell_size >= 1, ErrorKind::Config, "HOG cell size must be positive");
  require(eps > 0.0, ErrorKind::Config, "HOG eps must be positive");
}

Tensor compute_hog(const Tensor& images, const HogParams& p) {
  p.validate();
  detail::Raster r(images, "compute_hog");
  require(r.h % p.cell_size == 0 && r.w % p.cell_size == 0, ErrorKind::Geometry,
          "image " + std::to_string(r.h) + "x" + std::to_string(r.w) + " is not divisible by cell size " +
              std::to_string(p.cell_size));
  const std::int64_t ch_cells = r.h / p.cell_size, cw_cells = r.w / p.cell_size, nb = p.n_bins;
  const double bin_width = std::numbers::pi / static_cast<double>(nb);
  std::vector<double> out(static_cast<std::size_t>(r.b * r.c * ch_cells * cw_cells * nb), 0.0);

  for (std::int64_t n = 0; n < r.b; ++n) {
    for (std::int64_t ch = 0; ch < r.c; ++ch) {
      const double* img = r.plane(n, ch);
      double* hist = out.data() + (n * r.c + ch) * ch_cells * cw_cells * nb;
      for (std::int64_t y = 0; y < r.h; ++y) {
        const std::int64_t yu = detail::clamp_index(y - 1, r.h), yd = detail::clamp_index(y + 1, r.h);
        for (std::int64_t x = 0; x < r.w; ++x) {
          const std::int64_t xl = detail::clamp_index(x - 1, r.w), xr = detail::clamp_index(x + 1, r.w);
          const double gx = img[y * r.w + xr] - img[y * r.w + xl];
          const double gy = img[yd * r.w + x] - img[yu * r.w + x];
          const double mag = std::sqrt(gx * gx + gy * gy);
          if (mag == 0.0) continue;
          double theta = std::atan2(gy, gx);
          if (theta < 0.0) theta += std::numbers::pi;
          const double t = theta / bin_width;
          const double fl = std::floor(t);
          const std::int64_t b0 = static_cast<std::int64_t>(fl) % nb;
          const std::int64_t b1 = (b0 + 1) % nb;
          const double frac = t - fl;
          double* cell = hist + ((y / p.cell_size) * cw_cells + x / p.cell_size) * nb;
          cell[b0] += mag * (1.0 - frac);
          cell[b1] += mag * frac;
        }
      }
      for (std::int64_t k = 0; k < ch_cells * cw_cells; ++k) {
        double* cell = hist + k * nb;
        double sq = 0.0;
        for (std::int64_t b = 0; b < nb; ++b) sq += cell[b] * cell[b];
        const double denom = std::sqrt(sq) + p.eps;
        for (std::int64_t b = 0; b < nb; ++b) cell[b] /= denom;
      }
    }
  }
  return Tensor::from_values({r.b, r.c, ch_cells, cw_cells, nb}, out, images.dtype());
}

}  // namespace fgmae
