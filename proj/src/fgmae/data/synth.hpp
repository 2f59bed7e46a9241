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
#include <filesystem>
#include <optional>
#include <vector>

#include "fgmae/data/manifest.hpp"
#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

inline constexpr int kMsChannels = 13;
inline constexpr int kSarChannels = 2;
inline constexpr int kMsClasses = 8;
inline constexpr int kSarClasses = 6;

// Multispectral land-cover classes; band signatures follow the Sentinel-2
// L1C band order B1..B12 (13 bands).
enum class MsClass { Water, Forest, Cropland, Grassland, Urban, BareSoil, Wetland, Snow };
// SAR scene classes are defined by spatial structure only: every class draws
// its mean backscatter from the same range.
enum class SarClass { Smooth, RowsHorizontal, RowsVertical, RowsDiagonal, PointTargets, Parcels };

struct SyntheticSceneParams {
  std::uint64_t seed = 0;
  int size = 264;
  Modality modality = Modality::MS;
  int structures = 12;  // Voronoi regions (MS) or parcels (SAR)
  int looks = 1;        // speckle looks, SAR only
  std::optional<int> only_class;
};

struct SyntheticScene {
  Tensor image;  // C x size x size, f32
  Tensor clean;  // SAR: backscatter before speckle; MS: same as image
  Tensor mask;   // size x size class ids, f32
  std::vector<int> classes;  // sorted classes present in the mask
  int label = 0;             // SAR scene class; MS: dominant class
};

SyntheticScene synth_multispectral_scene(const SyntheticSceneParams& p, int season = 0);
SyntheticScene synth_sar_scene(const SyntheticSceneParams& p, int season = 0);

// Unit-mean gamma speckle (shape looks, scale 1/looks), one draw per pixel.
Tensor gamma_speckle(const Shape& shape, int looks, Rng& rng);

struct DatasetSpec {
  Modality modality = Modality::SAR;
  int locations = 8;
  std::uint64_t seed = 0;
  int looks = 1;
  int size = 264;
  int structures = 12;
};

// Writes `locations` x 4 seasons of scenes under out/scenes, one mask per
// location under out/masks, and out/manifest.csv. Returns the manifest.
SceneManifest write_synthetic_dataset(const std::filesystem::path& out, const DatasetSpec& spec);

}  // namespace fgmae
