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
namespace {

// Neighbour offsets along the quantised gradient direction.
struct Direction {
  int dx, dy;
};

Direction quantize_direction(double gx, double gy) {
  double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
  if (deg < 0.0) deg += 180.0;
  if (deg < 22.5 || deg >= 157.5) return {1, 0};
  if (deg < 67.5) return {1, 1};
  if (deg < 112.5) return {0, 1};
  return {-1, 1};
}

}  // namespace

void CannyParams::validate() const {
  require(sigma > 0.0, ErrorKind::Config, "Canny sigma must be positive");
  require(kernel >= 1 && kernel % 2 == 1, ErrorKind::Config, "Canny kernel size must be odd");
  require(low > 0.0 && low < high && high <= 1.0, ErrorKind::Config, "Canny thresholds must satisfy 0 < low < high <= 1");
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  const int r = size / 2;
  std::vector<double> k(static_cast<std::size_t>(size) * size);
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k[static_cast<std::size_t>((dy + r) * size + dx + r)] = v;
      total += v;
    }
  }
  for (double& v : k) v /= total;
  return k;
}

Tensor compute_canny(const Tensor& images, const CannyParams& p) {
  p.validate();
  detail::Raster r(images, "compute_canny");
  require(r.h >= p.kernel && r.w >= p.kernel, ErrorKind::Geometry, "image smaller than the Gaussian kernel");
  const auto kern = gaussian_kernel(p.kernel, p.sigma);
  const int rad = p.kernel / 2;
  const std::int64_t h = r.h, w = r.w, hw = h * w;
  std::vector<double> out(r.v.size(), 0.0);
  std::vector<double> blur(static_cast<std::size_t>(hw)), mag(static_cast<std::size_t>(hw)),
      thin(static_cast<std::size_t>(hw));
  std::vector<Direction> dir(static_cast<std::size_t>(hw));
  std::vector<std::int64_t> stack;

  for (std::int64_t n = 0; n < r.b; ++n) {
    for (std::int64_t ch = 0; ch < r.c; ++ch) {
      const double* img = r.plane(n, ch);
      double* edges = out.data() + (n * r.c + ch) * hw;

      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int dy = -rad; dy <= rad; ++dy) {
            const std::int64_t yy = detail::clamp_index(y + dy, h);
            for (int dx = -rad; dx <= rad; ++dx) {
              acc += kern[static_cast<std::size_t>((dy + rad) * p.kernel + dx + rad)] *
                     img[yy * w + detail::clamp_index(x + dx, w)];
            }
          }
          blur[static_cast<std::size_t>(y * w + x)] = acc;
        }
      }

      double peak = 0.0;
      for (std::int64_t y = 0; y < h; ++y) {
        const std::int64_t ym = detail::clamp_index(y - 1, h), yp = detail::clamp_index(y + 1, h);
        for (std::int64_t x = 0; x < w; ++x) {
          const std::int64_t xm = detail::clamp_index(x - 1, w), xp = detail::clamp_index(x + 1, w);
          auto at = [&](std::int64_t yy, std::int64_t xx) { return blur[static_cast<std::size_t>(yy * w + xx)]; };
          const double gx = (at(ym, xp) + 2.0 * at(y, xp) + at(yp, xp)) - (at(ym, xm) + 2.0 * at(y, xm) + at(yp, xm));
          const double gy = (at(yp, xm) + 2.0 * at(yp, x) + at(yp, xp)) - (at(ym, xm) + 2.0 * at(ym, x) + at(ym, xp));
          const std::size_t i = static_cast<std::size_t>(y * w + x);
          mag[i] = std::sqrt(gx * gx + gy * gy);
          dir[i] = quantize_direction(gx, gy);
          peak = std::max(peak, mag[i]);
        }
      }
      if (peak == 0.0) continue;

      auto mag_at = [&](std::int64_t y, std::int64_t x) {
        return (y < 0 || y >= h || x < 0 || x >= w) ? 0.0 : mag[static_cast<std::size_t>(y * w + x)];
      };
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y * w + x);
          const Direction d = dir[i];
          const double m = mag[i];
          const bool keep = m > 0.0 && m >= mag_at(y + d.dy, x + d.dx) && m >= mag_at(y - d.dy, x - d.dx);
          thin[i] = keep ? m : 0.0;
        }
      }

      const double hi = p.high * peak, lo = p.low * peak;
      stack.clear();
      for (std::int64_t i = 0; i < hw; ++i) {
        if (thin[static_cast<std::size_t>(i)] >= hi) {
          edges[i] = 1.0;
          stack.push_back(i);
        }
      }
      while (!stack.empty()) {
        const std::int64_t i = stack.back();
        stack.pop_back();
        const std::int64_t y = i / w, x = i % w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const std::int64_t yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            const std::int64_t j = yy * w + xx;
            if (edges[j] == 0.0 && thin[static_cast<std::size_t>(j)] >= lo && thin[static_cast<std::size_t>(j)] > 0.0) {
              edges[j] = 1.0;
              stack.push_back(j);
            }
          }
        }
      }
    }
  }
  return Tensor::from_values(images.shape(), out, images.dtype());
}

}  // namespace fgmae
