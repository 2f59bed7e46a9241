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

constexpr double kNormEps = 1e-12;

void l2_normalize(double* v, int n) {
  double sq = 0.0;
  for (int i = 0; i < n; ++i) sq += v[i] * v[i];
  const double denom = std::sqrt(sq) + kNormEps;
  for (int i = 0; i < n; ++i) v[i] /= denom;
}

}  // namespace

void SiftParams::validate() const {
  require(stride >= 1, ErrorKind::Config, "SIFT stride must be positive");
  require(spatial_bins >= 1 && support % spatial_bins == 0, ErrorKind::Config,
          "SIFT support must be divisible by the spatial bin count");
  require(orientation_bins >= 1, ErrorKind::Config, "SIFT needs orientation bins");
  require(clip > 0.0, ErrorKind::Config, "SIFT clip value must be positive");
}

SiftGrid sift_grid(std::int64_t height, std::int64_t width, const SiftParams& p) {
  p.validate();
  require(height >= p.support && width >= p.support, ErrorKind::Geometry, "image smaller than the SIFT support");
  return {(height - p.support) / p.stride + 1, (width - p.support) / p.stride + 1};
}

Tensor compute_dense_sift(const Tensor& images, const SiftParams& p) {
  detail::Raster r(grayscale_reduce(images.to(Dtype::F64)), "compute_dense_sift");
  const SiftGrid grid = sift_grid(r.h, r.w, p);
  const std::int64_t h = r.h, w = r.w;
  const int len = p.length(), cell = p.support / p.spatial_bins, nb = p.orientation_bins;
  const double bin_width = 2.0 * std::numbers::pi / nb;

  // Gaussian window with sigma = support / 2 around the window centre.
  std::vector<double> weight(static_cast<std::size_t>(p.support) * p.support);
  const double half = p.support / 2.0, sigma = p.support / 2.0;
  for (int v = 0; v < p.support; ++v) {
    for (int u = 0; u < p.support; ++u) {
      const double dx = u + 0.5 - half, dy = v + 0.5 - half;
      weight[static_cast<std::size_t>(v * p.support + u)] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    }
  }

  std::vector<double> mag(static_cast<std::size_t>(h * w)), ori(static_cast<std::size_t>(h * w));
  std::vector<double> out(static_cast<std::size_t>(r.b * grid.count() * len), 0.0);
  for (std::int64_t n = 0; n < r.b; ++n) {
    const double* img = r.plane(n, 0);
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const double gx = img[y * w + detail::clamp_index(x + 1, w)] - img[y * w + detail::clamp_index(x - 1, w)];
        const double gy = img[detail::clamp_index(y + 1, h) * w + x] - img[detail::clamp_index(y - 1, h) * w + x];
        double theta = std::atan2(gy, gx);
        if (theta < 0.0) theta += 2.0 * std::numbers::pi;
        mag[static_cast<std::size_t>(y * w + x)] = std::sqrt(gx * gx + gy * gy);
        ori[static_cast<std::size_t>(y * w + x)] = theta;
      }
    }
    for (std::int64_t gy = 0; gy < grid.rows; ++gy) {
      for (std::int64_t gx = 0; gx < grid.cols; ++gx) {
        double* desc = out.data() + ((n * grid.count()) + gy * grid.cols + gx) * len;
        const std::int64_t y0 = gy * p.stride, x0 = gx * p.stride;
        for (int v = 0; v < p.support; ++v) {
          for (int u = 0; u < p.support; ++u) {
            const std::size_t i = static_cast<std::size_t>((y0 + v) * w + x0 + u);
            if (mag[i] == 0.0) continue;
            const double m = mag[i] * weight[static_cast<std::size_t>(v * p.support + u)];
            const double t = ori[i] / bin_width;
            const double fl = std::floor(t);
            const int b0 = static_cast<int>(fl) % nb, b1 = (b0 + 1) % nb;
            const double frac = t - fl;
            double* hist = desc + ((v / cell) * p.spatial_bins + u / cell) * nb;
            hist[b0] += m * (1.0 - frac);
            hist[b1] += m * frac;
          }
        }
        l2_normalize(desc, len);
        for (int k = 0; k < len; ++k) desc[k] = std::min(desc[k], p.clip);
        l2_normalize(desc, len);
      }
    }
  }
  return Tensor::from_values({r.b, grid.count(), len}, out, images.dtype());
}

}  // namespace fgmae
