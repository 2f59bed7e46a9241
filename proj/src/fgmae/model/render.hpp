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

#include "fgmae/data/ppm.hpp"
#include "fgmae/features/features.hpp"
#include "fgmae/model/patchify.hpp"
#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

// NDI image [3, H, W] in [-1, 1] -> false colour (NDVI, NDWI, NDBI) -> (R, G, B).
RgbImage render_ndi(const Tensor& ndi);

// Per-cell orientation glyphs from histograms [Hc, Wc, bins] (channels
// averaged beforehand). Each bin draws a line through the cell centre
// perpendicular to its gradient orientation, brightness proportional to
// bin weight relative to the largest bin in the image.
RgbImage render_hog(const Tensor& cells, int cell_size);

// SAR composite [VV, VH, (VV + VH)/2], [3, H, W], before quantisation.
Tensor sar_composite(const Tensor& image);
// Composite quantised with [0, hi] -> [0, 255].
RgbImage render_sar(const Tensor& image, double hi = 1.0);

// Renders sample `index` of head predictions [B, L, K] for the given feature:
// NDI (or the NDI head of the dual HOG+NDI feature) as false colour, HOG as glyphs.
RgbImage render_reconstruction(const std::vector<Tensor>& predictions, const FeatureSpec& spec, int patch,
                               std::int64_t channels, const PatchGrid& grid, std::int64_t index = 0);

}  // namespace fgmae
