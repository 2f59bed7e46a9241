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

#include "fgmae/features/features.hpp"
#include "fgmae/model/patchify.hpp"

namespace fgmae {

const char* feature_name(FeatureKind k) noexcept {
  switch (k) {
    case FeatureKind::RawPixels: return "raw";
    case FeatureKind::CannyEdge: return "canny";
    case FeatureKind::Hog: return "hog";
    case FeatureKind::DenseSift: return "sift";
    case FeatureKind::Ndi: return "ndi";
    case FeatureKind::HogPlusNdi: return "hog+ndi";
  }
  return "?";
}

FeatureKind parse_feature(const std::string& name) {
  for (FeatureKind k : {FeatureKind::RawPixels, FeatureKind::CannyEdge, FeatureKind::Hog, FeatureKind::DenseSift,
                        FeatureKind::Ndi, FeatureKind::HogPlusNdi}) {
    if (name == feature_name(k)) return k;
  }
  fail(ErrorKind::Config, "unknown feature '" + name + "' (expected raw, canny, hog, sift, ndi or hog+ndi)");
}

void FeatureSpec::validate(std::int64_t channels, int patch) const {
  require(patch >= 1, ErrorKind::Config, "patch size must be positive");
  switch (kind) {
    case FeatureKind::RawPixels:
      break;
    case FeatureKind::CannyEdge:
      canny.validate();
      break;
    case FeatureKind::Hog:
      hog.validate();
      require(patch % hog.cell_size == 0, ErrorKind::Geometry, "patch size must be divisible by the HOG cell size");
      break;
    case FeatureKind::DenseSift:
      sift.validate();
      require(patch % sift.stride == 0, ErrorKind::Geometry, "patch size must be divisible by the SIFT stride");
      break;
    case FeatureKind::HogPlusNdi:
      hog.validate();
      require(patch % hog.cell_size == 0, ErrorKind::Geometry, "patch size must be divisible by the HOG cell size");
      [[fallthrough]];
    case FeatureKind::Ndi:
      bands.validate(channels);
      break;
  }
}

std::vector<std::int64_t> FeatureSpec::target_widths(std::int64_t channels, int patch) const {
  validate(channels, patch);
  const std::int64_t p = patch;
  const std::int64_t hog_width = channels * (p / hog.cell_size) * (p / hog.cell_size) * hog.n_bins;
  switch (kind) {
    case FeatureKind::RawPixels:
    case FeatureKind::CannyEdge:
      return {p * p * channels};
    case FeatureKind::Hog:
      return {hog_width};
    case FeatureKind::DenseSift:
      return {(p / sift.stride) * (p / sift.stride) * sift.length()};
    case FeatureKind::Ndi:
      return {p * p * 3};
    case FeatureKind::HogPlusNdi:
      return {hog_width, p * p * 3};
  }
  return {};
}

Tensor normalize_patches(const Tensor& patches, double eps) {
  require(patches.rank() == 3, ErrorKind::Shape, "normalize_patches expects B x L x K");
  const std::int64_t k = patches.dim(2), rows = patches.dim(0) * patches.dim(1);
  std::vector<double> v = patches.to_vector();
  for (std::int64_t r = 0; r < rows; ++r) {
    double* row = v.data() + r * k;
    double mean = 0.0;
    for (std::int64_t i = 0; i < k; ++i) mean += row[i];
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (std::int64_t i = 0; i < k; ++i) var += (row[i] - mean) * (row[i] - mean);
    const double sd = std::sqrt(var / static_cast<double>(k));
    for (std::int64_t i = 0; i < k; ++i) row[i] = (row[i] - mean) / (sd + eps);
  }
  return Tensor::from_values(patches.shape(), v, patches.dtype());
}

Tensor hog_patch_targets(const Tensor& hog, int patch, int cell_size) {
  require(hog.rank() == 5, ErrorKind::Shape, "HOG tensor must be B x C x Hc x Wc x bins");
  require(patch % cell_size == 0, ErrorKind::Geometry, "patch size must be divisible by the HOG cell size");
  const std::int64_t b = hog.dim(0), c = hog.dim(1), hc = hog.dim(2), wc = hog.dim(3), nb = hog.dim(4);
  const std::int64_t q = patch / cell_size;
  require(hc % q == 0 && wc % q == 0, ErrorKind::Geometry, "HOG cell grid does not tile into patches");
  const std::int64_t rows = hc / q, cols = wc / q, k = c * q * q * nb;
  const std::vector<double> src = hog.to_vector();
  std::vector<double> out(src.size());
  std::size_t o = 0;
  for (std::int64_t n = 0; n < b; ++n) {
    for (std::int64_t py = 0; py < rows; ++py) {
      for (std::int64_t px = 0; px < cols; ++px) {
        for (std::int64_t ch = 0; ch < c; ++ch) {
          for (std::int64_t cy = 0; cy < q; ++cy) {
            for (std::int64_t cx = 0; cx < q; ++cx) {
              const double* cell = src.data() + (((n * c + ch) * hc + py * q + cy) * wc + px * q + cx) * nb;
              for (std::int64_t i = 0; i < nb; ++i) out[o++] = cell[i];
            }
          }
        }
      }
    }
  }
  return Tensor::from_values({b, rows * cols, k}, out, hog.dtype());
}

Tensor sift_patch_targets(const Tensor& sift, const SiftGrid& grid, std::int64_t height, std::int64_t width,
                          int patch, const SiftParams& p) {
  require(sift.rank() == 3 && sift.dim(1) == grid.count() && sift.dim(2) == p.length(), ErrorKind::Shape,
          "SIFT tensor does not match its grid");
  require(patch % p.stride == 0, ErrorKind::Geometry, "patch size must be divisible by the SIFT stride");
  const PatchGrid pg = patch_grid(height, width, patch);
  const std::int64_t b = sift.dim(0), len = p.length(), spp = patch / p.stride, k = spp * spp * len;
  const std::vector<double> src = sift.to_vector();
  std::vector<double> out(static_cast<std::size_t>(b * pg.count() * k), 0.0);
  for (std::int64_t n = 0; n < b; ++n) {
    for (std::int64_t gy = 0; gy < grid.rows; ++gy) {
      for (std::int64_t gx = 0; gx < grid.cols; ++gx) {
        const std::int64_t cy = gy * p.stride + p.support / 2, cx = gx * p.stride + p.support / 2;
        const std::int64_t py = cy / patch, px = cx / patch;
        if (py >= pg.rows || px >= pg.cols) continue;
        const std::int64_t slot = ((cy - py * patch) / p.stride) * spp + (cx - px * patch) / p.stride;
        const double* d = src.data() + (n * grid.count() + gy * grid.cols + gx) * len;
        double* dst = out.data() + ((n * pg.count() + py * pg.cols + px) * k + slot * len);
        std::copy(d, d + len, dst);
      }
    }
  }
  return Tensor::from_values({b, pg.count(), k}, out, sift.dtype());
}

TargetTensor assemble_targets(const Tensor& images, const FeatureSpec& spec, int patch) {
  require(images.rank() == 4, ErrorKind::Shape, "assemble_targets expects B x C x H x W");
  spec.validate(images.dim(1), patch);
  patch_grid(images.dim(2), images.dim(3), patch);
  TargetTensor t;
  switch (spec.kind) {
    case FeatureKind::RawPixels:
      t.values.push_back(normalize_patches(patchify(images, patch)));
      t.patch_normalized = true;
      break;
    case FeatureKind::CannyEdge:
      t.values.push_back(normalize_patches(patchify(compute_canny(images, spec.canny), patch)));
      t.patch_normalized = true;
      break;
    case FeatureKind::Hog:
      t.values.push_back(hog_patch_targets(compute_hog(images, spec.hog), patch, spec.hog.cell_size));
      break;
    case FeatureKind::DenseSift: {
      const SiftGrid grid = sift_grid(images.dim(2), images.dim(3), spec.sift);
      t.values.push_back(
          sift_patch_targets(compute_dense_sift(images, spec.sift), grid, images.dim(2), images.dim(3), patch, spec.sift));
      break;
    }
    case FeatureKind::Ndi:
      t.values.push_back(patchify(compute_ndi(images, spec.bands), patch));
      break;
    case FeatureKind::HogPlusNdi:
      t.values.push_back(hog_patch_targets(compute_hog(images, spec.hog), patch, spec.hog.cell_size));
      t.values.push_back(patchify(compute_ndi(images, spec.bands), patch));
      break;
  }
  return t;
}

}  // namespace fgmae
