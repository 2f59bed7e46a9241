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

#include "fgmae/model/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fgmae/core/error.hpp"

namespace fgmae {

RgbImage render_ndi(const Tensor& ndi) {
  require(ndi.rank() == 3 && ndi.dim(0) == 3, ErrorKind::Shape, "NDI render expects 3 x H x W");
  const int h = static_cast<int>(ndi.dim(1)), w = static_cast<int>(ndi.dim(2));
  const std::vector<double> v = ndi.to_vector();
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t* px = img.pixel(x, y);
      for (int c = 0; c < 3; ++c) px[c] = quantize(v[(static_cast<std::size_t>(c) * h + y) * w + x], -1.0, 1.0);
    }
  }
  return img;
}

RgbImage render_hog(const Tensor& cells, int cell_size) {
  require(cells.rank() == 3, ErrorKind::Shape, "HOG render expects Hc x Wc x bins");
  require(cell_size >= 3, ErrorKind::InvalidArgument, "HOG glyph cells need at least 3 pixels");
  const int hc = static_cast<int>(cells.dim(0)), wc = static_cast<int>(cells.dim(1)), nb = static_cast<int>(cells.dim(2));
  const std::vector<double> v = cells.to_vector();
  double peak = 0.0;
  for (double x : v) peak = std::max(peak, x);
  RgbImage img(wc * cell_size, hc * cell_size);
  if (peak <= 0.0) return img;
  const double half = (cell_size - 1) / 2.0;
  const int steps = 4 * cell_size;
  for (int cy = 0; cy < hc; ++cy) {
    for (int cx = 0; cx < wc; ++cx) {
      for (int b = 0; b < nb; ++b) {
        const double weight = v[(static_cast<std::size_t>(cy) * wc + cx) * nb + b];
        if (weight <= 0.0) continue;
        const std::uint8_t level = quantize(weight, 0.0, peak);
        // Edge direction is perpendicular to the gradient bin centre.
        const double theta = b * std::numbers::pi / nb + std::numbers::pi / 2.0;
        const double dx = std::cos(theta), dy = std::sin(theta);
        for (int s = -steps; s <= steps; ++s) {
          const double t = half * s / steps;
          const int x = static_cast<int>(std::lround(half + t * dx)), y = static_cast<int>(std::lround(half + t * dy));
          std::uint8_t* px = img.pixel(cx * cell_size + x, cy * cell_size + y);
          for (int c = 0; c < 3; ++c) px[c] = std::max(px[c], level);
        }
      }
    }
  }
  return img;
}

Tensor sar_composite(const Tensor& image) {
  require(image.rank() == 3 && image.dim(0) == 2, ErrorKind::Shape, "SAR composite expects 2 x H x W");
  const std::int64_t hw = image.dim(1) * image.dim(2);
  const std::vector<double> v = image.to_vector();
  std::vector<double> out(static_cast<std::size_t>(3 * hw));
  for (std::int64_t i = 0; i < hw; ++i) {
    out[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(hw + i)] = v[static_cast<std::size_t>(hw + i)];
    out[static_cast<std::size_t>(2 * hw + i)] = (v[static_cast<std::size_t>(i)] + v[static_cast<std::size_t>(hw + i)]) / 2.0;
  }
  return Tensor::from_values({3, image.dim(1), image.dim(2)}, out, Dtype::F64);
}

RgbImage render_sar(const Tensor& image, double hi) {
  require(hi > 0.0, ErrorKind::InvalidArgument, "SAR render range must be positive");
  const Tensor comp = sar_composite(image);
  const int h = static_cast<int>(comp.dim(1)), w = static_cast<int>(comp.dim(2));
  auto v = comp.data<double>();
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.pixel(x, y)[c] = quantize(v[(static_cast<std::size_t>(c) * h + y) * w + x], 0.0, hi);
    }
  }
  return img;
}

RgbImage render_reconstruction(const std::vector<Tensor>& predictions, const FeatureSpec& spec, int patch,
                               std::int64_t channels, const PatchGrid& grid, std::int64_t index) {
  auto sample = [&](const Tensor& t) {
    require(t.rank() == 3 && index >= 0 && index < t.dim(0) && t.dim(1) == grid.count(), ErrorKind::Shape,
            "prediction tensor does not match the patch grid");
    const std::vector<double> all = t.to_vector();
    const std::int64_t n = t.dim(1) * t.dim(2);
    return Tensor::from_values({1, t.dim(1), t.dim(2)},
                               std::span<const double>(all.data() + index * n, static_cast<std::size_t>(n)), Dtype::F64);
  };
  switch (spec.kind) {
    case FeatureKind::Ndi:
    case FeatureKind::HogPlusNdi: {
      require(predictions.size() == (spec.dual() ? 2u : 1u), ErrorKind::Shape, "head count does not match the feature");
      const Tensor ndi = unpatchify(sample(predictions.back()), patch, 3, grid);
      return render_ndi(ndi.reshape({3, ndi.dim(2), ndi.dim(3)}));
    }
    case FeatureKind::Hog: {
      require(predictions.size() == 1, ErrorKind::Shape, "HOG render expects one head");
      const Tensor t = sample(predictions[0]);
      const int q = patch / spec.hog.cell_size, nb = spec.hog.n_bins;
      require(t.dim(2) == channels * q * q * nb, ErrorKind::Shape, "HOG prediction width mismatch");
      const std::int64_t hc = grid.rows * q, wc = grid.cols * q;
      std::vector<double> cells(static_cast<std::size_t>(hc * wc * nb), 0.0);
      auto v = t.data<double>();
      for (std::int64_t py = 0; py < grid.rows; ++py) {
        for (std::int64_t px = 0; px < grid.cols; ++px) {
          const double* row = v.data() + (py * grid.cols + px) * t.dim(2);
          for (std::int64_t ch = 0; ch < channels; ++ch) {
            for (int cy = 0; cy < q; ++cy) {
              for (int cx = 0; cx < q; ++cx) {
                for (int b = 0; b < nb; ++b) {
                  cells[static_cast<std::size_t>(((py * q + cy) * wc + px * q + cx) * nb + b)] +=
                      row[((ch * q + cy) * q + cx) * nb + b] / static_cast<double>(channels);
                }
              }
            }
          }
        }
      }
      return render_hog(Tensor::from_values({hc, wc, nb}, cells, Dtype::F64), spec.hog.cell_size);
    }
    default:
      fail(ErrorKind::InvalidArgument, std::string("no renderer for feature ") + feature_name(spec.kind));
  }
}

}  // namespace fgmae
