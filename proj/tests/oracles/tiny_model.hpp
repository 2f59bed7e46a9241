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

#include "fgmae/data/synth.hpp"
#include "fgmae/features/features.hpp"
#include "fgmae/model/model.hpp"
#include "fgmae/model/patchify.hpp"

namespace fgmae::testing {

// W=32, w=8, K_en=32, depth 1; HOG targets on 2-channel SAR scenes.
inline ModelConfig tiny_config(Dtype dtype = Dtype::F64) {
  ModelConfig c;
  c.image_size = 32;
  c.patch = 8;
  c.in_channels = 2;
  c.enc_dim = 32;
  c.enc_depth = 1;
  c.enc_heads = 2;
  c.dec_dim = 16;
  c.dec_depth = 1;
  c.dec_heads = 2;
  c.mask_ratio = 0.5;
  FeatureSpec hog;
  c.head_widths = hog.target_widths(2, 8);
  c.head_weights = {1.0};
  c.dtype = dtype;
  return c;
}

struct TinyBatch {
  Tensor images;   // B x 2 x 32 x 32
  Tensor patches;  // B x L x 128
  std::vector<Tensor> targets;
};

inline TinyBatch tiny_batch(std::int64_t batch, std::uint64_t seed, Dtype dtype = Dtype::F64) {
  std::vector<double> pixels;
  for (std::int64_t b = 0; b < batch; ++b) {
    SyntheticSceneParams p;
    p.seed = seed + static_cast<std::uint64_t>(b);
    p.size = 32;
    p.modality = Modality::SAR;
    auto v = synth_sar_scene(p).image.to_vector();
    pixels.insert(pixels.end(), v.begin(), v.end());
  }
  TinyBatch t;
  t.images = Tensor::from_values({batch, 2, 32, 32}, pixels, dtype);
  t.patches = patchify(t.images, 8);
  t.targets = assemble_targets(t.images, FeatureSpec{}, 8).values;
  return t;
}

}  // namespace fgmae::testing
