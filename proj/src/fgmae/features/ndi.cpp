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

#include "fgmae/features/features.hpp"
#include "fgmae/features/raster.hpp"

namespace fgmae {

void BandMap::validate(std::int64_t channels) const {
  const int idx[4] = {nir, red, green, swir};
  for (int i = 0; i < 4; ++i) {
    require(idx[i] >= 0 && idx[i] < channels, ErrorKind::Geometry,
            "band index " + std::to_string(idx[i]) + " outside " + std::to_string(channels) + " channels");
    for (int j = 0; j < i; ++j) require(idx[i] != idx[j], ErrorKind::Geometry, "band indices must be distinct");
  }
}

double normalized_difference(double x, double y) {
  const double s = x + y;
  return s == 0.0 ? 0.0 : (x - y) / s;
}

Tensor compute_ndi(const Tensor& images, const BandMap& bands) {
  detail::Raster r(images, "compute_ndi");
  bands.validate(r.c);
  const std::int64_t hw = r.h * r.w;
  std::vector<double> out(static_cast<std::size_t>(r.b * 3 * hw));
  for (std::int64_t n = 0; n < r.b; ++n) {
    const double* nir = r.plane(n, bands.nir);
    const double* red = r.plane(n, bands.red);
    const double* green = r.plane(n, bands.green);
    const double* swir = r.plane(n, bands.swir);
    double* ndvi = out.data() + n * 3 * hw;
    double* ndwi = ndvi + hw;
    double* ndbi = ndwi + hw;
    for (std::int64_t i = 0; i < hw; ++i) {
      ndvi[i] = normalized_difference(nir[i], red[i]);
      ndwi[i] = normalized_difference(green[i], nir[i]);
      ndbi[i] = normalized_difference(swir[i], nir[i]);
    }
  }
  return Tensor::from_values({r.b, 3, r.h, r.w}, out, images.dtype());
}

Tensor grayscale_reduce(const Tensor& images) {
  detail::Raster r(images, "grayscale_reduce");
  require(r.c >= 1, ErrorKind::Shape, "grayscale_reduce needs at least one channel");
  const std::int64_t hw = r.h * r.w;
  std::vector<double> out(static_cast<std::size_t>(r.b * hw), 0.0);
  for (std::int64_t n = 0; n < r.b; ++n) {
    double* dst = out.data() + n * hw;
    for (std::int64_t ch = 0; ch < r.c; ++ch) {
      const double* src = r.plane(n, ch);
      for (std::int64_t i = 0; i < hw; ++i) dst[i] += src[i];
    }
    for (std::int64_t i = 0; i < hw; ++i) dst[i] /= static_cast<double>(r.c);
  }
  return Tensor::from_values({r.b, 1, r.h, r.w}, out, images.dtype());
}

}  // namespace fgmae
