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
#include <string>
#include <vector>

#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

// All extractors take B x C x H x W rasters and return tensors of the input
// dtype. They are pure functions and track no gradients.

struct BandMap {
  int nir = 7;    // B8
  int red = 3;    // B4
  int green = 2;  // B3
  int swir = 10;  // B11

  void validate(std::int64_t channels) const;
};

struct HogParams {
  int n_bins = 9;
  int cell_size = 8;
  double eps = 1e-10;

  void validate() const;
};

struct CannyParams {
  double sigma = 1.4;
  int kernel = 5;
  double low = 0.1;   // fractions of the channel's maximum gradient magnitude
  double high = 0.2;

  void validate() const;
};

struct SiftParams {
  int stride = 8;
  int support = 16;
  int spatial_bins = 4;
  int orientation_bins = 8;
  double clip = 0.2;

  int length() const { return spatial_bins * spatial_bins * orientation_bins; }
  void validate() const;
};

// [NDVI, NDWI, NDBI]; (x - y)/(x + y) with 0 where x + y == 0.
Tensor compute_ndi(const Tensor& images, const BandMap& bands);
double normalized_difference(double x, double y);

// B x C x (H/cell) x (W/cell) x n_bins. Central [-1, 0, 1] gradients with
// replicate borders; unsigned orientation with bin b centred at b*pi/n_bins;
// each pixel splits its magnitude linearly between the two nearest bins;
// every cell histogram is divided by (L2 norm + eps).
Tensor compute_hog(const Tensor& images, const HogParams& p);

// Binary edge map of the input shape.
Tensor compute_canny(const Tensor& images, const CannyParams& p);
// Normalised 2-D Gaussian taps, row-major kernel x kernel.
std::vector<double> gaussian_kernel(int size, double sigma);

struct SiftGrid {
  std::int64_t rows = 0, cols = 0;
  std::int64_t count() const { return rows * cols; }
};
SiftGrid sift_grid(std::int64_t height, std::int64_t width, const SiftParams& p);

// B x G x 128 over a regular grid of descriptor windows (top-left corners at
// multiples of stride), computed on the channel-mean image.
Tensor compute_dense_sift(const Tensor& images, const SiftParams& p);

// B x 1 x H x W channel mean.
Tensor grayscale_reduce(const Tensor& images);

enum class FeatureKind { RawPixels, CannyEdge, Hog, DenseSift, Ndi, HogPlusNdi };

const char* feature_name(FeatureKind k) noexcept;
FeatureKind parse_feature(const std::string& name);

struct FeatureSpec {
  FeatureKind kind = FeatureKind::Hog;
  HogParams hog;
  CannyParams canny;
  SiftParams sift;
  BandMap bands;

  bool dual() const { return kind == FeatureKind::HogPlusNdi; }
  void validate(std::int64_t channels, int patch) const;
  // Target widths per head (one entry, or HOG then NDI for the dual HOG+NDI feature).
  std::vector<std::int64_t> target_widths(std::int64_t channels, int patch) const;
};

struct TargetTensor {
  std::vector<Tensor> values;  // one B x L x K tensor per head
  bool patch_normalized = false;
};

// Raw and Canny targets get per-patch (x - mean)/(std + 1e-6) over the whole
// patch vector; HOG, NDI and SIFT are used as extracted.
TargetTensor assemble_targets(const Tensor& images, const FeatureSpec& spec, int patch);

// Per-row standardisation of a B x L x K tensor.
Tensor normalize_patches(const Tensor& patches, double eps = 1e-6);

// Cell histograms of each patch, concatenated channel, cell row, cell column, bin.
Tensor hog_patch_targets(const Tensor& hog, int patch, int cell_size);
// Each patch owns (patch/stride)^2 descriptor slots; a descriptor whose window
// centre lies in the patch fills slot floor((centre - patch origin)/stride).
// Slots without a descriptor stay zero.
Tensor sift_patch_targets(const Tensor& sift, const SiftGrid& grid, std::int64_t height, std::int64_t width,
                          int patch, const SiftParams& p);

}  // namespace fgmae
