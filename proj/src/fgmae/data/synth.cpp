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

#include "fgmae/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "fgmae/data/fgmr.hpp"

namespace fgmae {
namespace {

using Signature = std::array<double, kMsChannels>;

// Approximate top-of-atmosphere reflectances, B1..B12.
constexpr std::array<Signature, kMsClasses> kSignatures = {{
    {0.08, 0.07, 0.06, 0.04, 0.03, 0.02, 0.02, 0.015, 0.012, 0.005, 0.002, 0.008, 0.005},
    {0.03, 0.03, 0.05, 0.03, 0.08, 0.25, 0.30, 0.33, 0.34, 0.10, 0.005, 0.15, 0.07},
    {0.05, 0.05, 0.08, 0.06, 0.12, 0.30, 0.36, 0.40, 0.41, 0.12, 0.006, 0.22, 0.12},
    {0.05, 0.05, 0.07, 0.07, 0.11, 0.20, 0.24, 0.26, 0.27, 0.09, 0.005, 0.25, 0.15},
    {0.12, 0.12, 0.13, 0.15, 0.17, 0.19, 0.20, 0.21, 0.21, 0.08, 0.008, 0.28, 0.25},
    {0.10, 0.11, 0.15, 0.20, 0.23, 0.25, 0.26, 0.27, 0.28, 0.10, 0.010, 0.35, 0.30},
    {0.06, 0.05, 0.07, 0.05, 0.08, 0.15, 0.17, 0.18, 0.18, 0.06, 0.004, 0.10, 0.05},
    {0.90, 0.88, 0.86, 0.85, 0.84, 0.82, 0.80, 0.78, 0.76, 0.30, 0.050, 0.10, 0.08},
}};

bool is_vegetation(int c) {
  return c == static_cast<int>(MsClass::Forest) || c == static_cast<int>(MsClass::Cropland) ||
         c == static_cast<int>(MsClass::Grassland) || c == static_cast<int>(MsClass::Wetland);
}

// Sum of a few random plane waves, roughly in [-1, 1].
struct SmoothField {
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves;

  SmoothField(Rng& rng, int n, double min_period, double max_period) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double period = rng.uniform(min_period, max_period);
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double k = 2.0 * std::numbers::pi / period;
      Wave w{k * std::cos(theta), k * std::sin(theta), rng.uniform(0.0, 2.0 * std::numbers::pi),
             rng.uniform(0.5, 1.0)};
      total += w.amp;
      waves.push_back(w);
    }
    for (auto& w : waves) w.amp /= total;
  }

  double operator()(double x, double y) const {
    double v = 0.0;
    for (const auto& w : waves) v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
    return v;
  }
};

struct Site {
  double x, y;
  int cls;
};

// Nearest-site label with a smooth warp so region borders are irregular.
std::vector<int> voronoi_labels(const std::vector<Site>& sites, int size, const SmoothField& wx,
                                const SmoothField& wy, double warp) {
  std::vector<int> lab(static_cast<std::size_t>(size) * size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double px = x + warp * wx(x, y);
      const double py = y + warp * wy(x, y);
      double best = 1e300;
      int idx = 0;
      for (std::size_t s = 0; s < sites.size(); ++s) {
        const double dx = px - sites[s].x, dy = py - sites[s].y;
        const double d = dx * dx + dy * dy;
        if (d < best) {
          best = d;
          idx = static_cast<int>(s);
        }
      }
      lab[static_cast<std::size_t>(y) * size + x] = idx;
    }
  }
  return lab;
}

std::vector<int> present_classes(const std::vector<float>& mask, int n_classes) {
  std::vector<int> count(n_classes, 0);
  for (float v : mask) ++count[static_cast<int>(v)];
  std::vector<int> out;
  for (int c = 0; c < n_classes; ++c) {
    if (count[c] > 0) out.push_back(c);
  }
  return out;
}

}  // namespace

Tensor gamma_speckle(const Shape& shape, int looks, Rng& rng) {
  require(looks >= 1, ErrorKind::InvalidArgument, "speckle looks must be >= 1");
  std::gamma_distribution<double> dist(static_cast<double>(looks), 1.0 / looks);
  std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
  for (float& x : v) x = static_cast<float>(dist(rng));
  return Tensor::from_vector(shape, std::move(v));
}

SyntheticScene synth_multispectral_scene(const SyntheticSceneParams& p, int season) {
  require(p.size >= 8, ErrorKind::InvalidArgument, "scene size too small");
  require(p.structures >= 1, ErrorKind::InvalidArgument, "need at least one structure");
  require(season >= 0 && season <= 3, ErrorKind::InvalidArgument, "season outside 0..3");
  const int n = p.size;
  Rng root(p.seed);
  Rng layout = root.split("layout");

  std::vector<Site> sites;
  for (int s = 0; s < p.structures; ++s) {
    Site site{layout.uniform(0, n), layout.uniform(0, n), 0};
    if (p.only_class) {
      site.cls = *p.only_class;
    } else {
      // Snow is rare.
      site.cls = layout.uniform() < 0.05 ? static_cast<int>(MsClass::Snow)
                                         : static_cast<int>(layout.uniform_int(kMsClasses - 1));
    }
    sites.push_back(site);
  }
  require(sites[0].cls >= 0 && sites[0].cls < kMsClasses, ErrorKind::InvalidArgument,
          "MS class out of range");
  SmoothField wx(layout, 3, n / 3.0, n), wy(layout, 3, n / 3.0, n);
  SmoothField texture(layout, 4, 6.0, 40.0);
  const double row_period = layout.uniform(5.0, 12.0);
  const double row_angle = layout.uniform(0.0, std::numbers::pi);
  auto region = voronoi_labels(sites, n, wx, wy, n / 12.0);

  Rng season_rng = root.split("season").split(static_cast<std::uint64_t>(season));
  constexpr std::array<double, 4> kVegetationGain = {0.75, 1.0, 1.1, 0.9};
  const double brightness = season_rng.uniform(0.95, 1.05);
  Rng noise_rng = root.split("noise").split(static_cast<std::uint64_t>(season));

  std::vector<float> img(static_cast<std::size_t>(kMsChannels) * n * n);
  std::vector<float> mask(static_cast<std::size_t>(n) * n);
  const double ca = std::cos(row_angle), sa = std::sin(row_angle);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int cls = sites[region[static_cast<std::size_t>(y) * n + x]].cls;
      mask[static_cast<std::size_t>(y) * n + x] = static_cast<float>(cls);
      double tex = 1.0 + 0.08 * texture(x, y);
      if (cls == static_cast<int>(MsClass::Cropland)) {
        tex *= 1.0 + 0.12 * std::sin(2.0 * std::numbers::pi * (x * ca + y * sa) / row_period);
      }
      for (int b = 0; b < kMsChannels; ++b) {
        double v = kSignatures[cls][b] * tex * brightness;
        // Red edge and NIR respond to the growing season.
        if (is_vegetation(cls) && b >= 4 && b <= 8) v *= kVegetationGain[season];
        v += noise_rng.normal(0.0, 0.004);
        img[(static_cast<std::size_t>(b) * n + y) * n + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  SyntheticScene scene;
  scene.image = Tensor::from_vector({kMsChannels, n, n}, std::move(img));
  scene.clean = scene.image;
  scene.classes = present_classes(mask, kMsClasses);
  std::vector<int> count(kMsClasses, 0);
  for (float v : mask) ++count[static_cast<int>(v)];
  scene.label = static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
  scene.mask = Tensor::from_vector({n, n}, std::move(mask));
  return scene;
}

SyntheticScene synth_sar_scene(const SyntheticSceneParams& p, int season) {
  require(p.size >= 8, ErrorKind::InvalidArgument, "scene size too small");
  require(p.looks >= 1, ErrorKind::InvalidArgument, "speckle looks must be >= 1");
  require(season >= 0 && season <= 3, ErrorKind::InvalidArgument, "season outside 0..3");
  const int n = p.size;
  Rng root(p.seed);
  Rng layout = root.split("layout");
  const int cls = p.only_class ? *p.only_class : static_cast<int>(layout.uniform_int(kSarClasses));
  require(cls >= 0 && cls < kSarClasses, ErrorKind::InvalidArgument, "SAR class out of range");

  const double base = layout.uniform(0.15, 0.45);
  const double cross_ratio = layout.uniform(0.3, 0.6);
  const double contrast = layout.uniform(0.5, 0.9);
  const double period = layout.uniform(8.0, 20.0);
  const double phase = layout.uniform(0.0, 2.0 * std::numbers::pi);
  const double diag = layout.uniform() < 0.5 ? 1.0 : -1.0;
  SmoothField smooth(layout, 3, n / 2.0, 2.0 * n);

  // Point targets: bright square blocks on a jittered grid.
  const int spacing = static_cast<int>(layout.uniform(14.0, 24.0));
  const int block = static_cast<int>(layout.uniform(5.0, 9.0));
  const int ox = static_cast<int>(layout.uniform_int(spacing));
  const int oy = static_cast<int>(layout.uniform_int(spacing));
  const double inside_frac = static_cast<double>(block * block) / (spacing * spacing);

  std::vector<Site> parcels;
  std::vector<double> parcel_level;
  for (int s = 0; s < p.structures; ++s) {
    parcels.push_back({layout.uniform(0, n), layout.uniform(0, n), 0});
    parcel_level.push_back(layout.uniform(-1.0, 1.0));
  }
  SmoothField wx(layout, 2, n / 2.0, n), wy(layout, 2, n / 2.0, n);
  std::vector<int> parcel_of;
  if (cls == static_cast<int>(SarClass::Parcels)) parcel_of = voronoi_labels(parcels, n, wx, wy, 4.0);

  Rng season_rng = root.split("season").split(static_cast<std::uint64_t>(season));
  const double gain = season_rng.uniform(0.9, 1.1);

  std::vector<float> clean(static_cast<std::size_t>(kSarChannels) * n * n);
  const double k = 2.0 * std::numbers::pi / period;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double s = 0.0;
      switch (static_cast<SarClass>(cls)) {
        case SarClass::Smooth:
          s = 0.3 * smooth(x, y);
          break;
        case SarClass::RowsHorizontal:
          s = std::sin(k * y + phase);
          break;
        case SarClass::RowsVertical:
          s = std::sin(k * x + phase);
          break;
        case SarClass::RowsDiagonal:
          s = std::sin(k * (x + diag * y) / std::numbers::sqrt2 + phase);
          break;
        case SarClass::PointTargets: {
          const bool in = ((x + ox) % spacing) < block && ((y + oy) % spacing) < block;
          // Zero-mean two-level pattern.
          s = in ? 1.0 : -inside_frac / (1.0 - inside_frac);
          break;
        }
        case SarClass::Parcels:
          s = parcel_level[parcel_of[static_cast<std::size_t>(y) * n + x]];
          break;
      }
      const double vv = base * gain * std::max(0.05, 1.0 + contrast * s);
      clean[static_cast<std::size_t>(y) * n + x] = static_cast<float>(vv);
      clean[(static_cast<std::size_t>(n) + y) * n + x] = static_cast<float>(vv * cross_ratio);
    }
  }
  Tensor clean_t = Tensor::from_vector({kSarChannels, n, n}, std::move(clean));
  Rng speckle_rng = root.split("speckle").split(static_cast<std::uint64_t>(season));
  Tensor speckle = gamma_speckle(clean_t.shape(), p.looks, speckle_rng);
  std::vector<float> noisy(static_cast<std::size_t>(clean_t.numel()));
  auto c = clean_t.data<float>();
  auto sp = speckle.data<float>();
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] = c[i] * sp[i];

  SyntheticScene scene;
  scene.image = Tensor::from_vector(clean_t.shape(), std::move(noisy));
  scene.clean = clean_t;
  scene.mask = Tensor::full({n, n}, static_cast<double>(cls), Dtype::F32);
  scene.classes = {cls};
  scene.label = cls;
  return scene;
}

SceneManifest write_synthetic_dataset(const std::filesystem::path& out, const DatasetSpec& spec) {
  require(spec.locations >= 1, ErrorKind::InvalidArgument, "need at least one location");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out / "scenes", ec);
  if (!ec) fs::create_directories(out / "masks", ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + out.string() + ": " + ec.message());

  SceneManifest manifest(out);
  Rng root = Rng(spec.seed).split("locations");
  for (int loc = 0; loc < spec.locations; ++loc) {
    SyntheticSceneParams p;
    p.seed = root.split(static_cast<std::uint64_t>(loc))();
    p.size = spec.size;
    p.modality = spec.modality;
    p.structures = spec.structures;
    p.looks = spec.looks;
    char id[32];
    std::snprintf(id, sizeof(id), "loc%04d", loc);
    for (int season = 0; season < 4; ++season) {
      SyntheticScene s = spec.modality == Modality::MS ? synth_multispectral_scene(p, season)
                                                       : synth_sar_scene(p, season);
      char name[64];
      std::snprintf(name, sizeof(name), "scenes/%s_s%d.fgmr", id, season);
      write_tensor(out / name, s.image);
      if (season == 0) write_tensor(out / "masks" / (std::string(id) + ".fgmr"), s.mask);
      ManifestEntry e;
      e.location_id = id;
      e.season = season;
      e.modality = spec.modality;
      e.path = name;
      e.label = spec.modality == Modality::MS ? format_multi_label(s.classes) : std::to_string(s.label);
      manifest.add(std::move(e));
    }
  }
  manifest.save(out / "manifest.csv");
  return manifest;
}

}  // namespace fgmae
