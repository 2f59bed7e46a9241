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

#include "fgmae/tensor/rng.hpp"
#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

struct AugmentationConfig {
  double scale_min = 0.2;
  double scale_max = 1.0;
  double ratio_min = 3.0 / 4.0;
  double ratio_max = 4.0 / 3.0;
  int out_size = 224;
  double flip_prob = 0.5;
  double mixup_alpha = 0.8;  // fine-tuning only

  void validate() const;
};

struct CropBox {
  int top = 0, left = 0, height = 0, width = 0;
};

// Samples a crop window: up to 10 draws of (area fraction, log-uniform aspect),
// then a center crop with the aspect clamped into range.
CropBox sample_crop(int height, int width, const AugmentationConfig& cfg, Rng& rng);

// Bilinear resampling of a C x H x W tensor with half-pixel centers:
// src = (dst + 0.5) * in / out - 0.5, clamped to the valid range.
Tensor resize_bilinear(const Tensor& image, int out_h, int out_w);
Tensor crop(const Tensor& image, const CropBox& box);

Tensor random_resized_crop(const Tensor& image, const AugmentationConfig& cfg, Rng& rng);

// Mirrors along width (last axis) with probability prob. One uniform draw
// is consumed regardless of prob.
Tensor horizontal_flip(const Tensor& image, double prob, Rng& rng);
Tensor flip_width(const Tensor& image);

struct MixupBatch {
  Tensor images;  // B x ...
  Tensor labels;  // B x K
  double lambda = 1.0;
  std::vector<std::int64_t> permutation;
};

// lambda ~ Beta(alpha, alpha); x' = lambda x + (1 - lambda) x[perm].
MixupBatch mixup(const Tensor& images, const Tensor& labels, double alpha, Rng& rng);
MixupBatch mixup_with(const Tensor& images, const Tensor& labels, double lambda,
                      const std::vector<std::int64_t>& permutation);

// Places source channel i at destination[i] (identity when empty); all other
// channels are zero.
Tensor zero_pad_channels(const Tensor& image, int target_channels,
                         const std::vector<int>& destination = {});

}  // namespace fgmae
