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

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "fgmae/features/features.hpp"
#include "fgmae/model/patchify.hpp"
#include "oracles/feature_oracles.hpp"
#include "oracles/test_util.hpp"

namespace fgmae {
namespace {

using testing::random_tensor;

oracle::Image channel_of(const Tensor& t, std::int64_t n, std::int64_t c) {
  oracle::Image img{static_cast<int>(t.dim(2)), static_cast<int>(t.dim(3)), {}};
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) img.px.push_back(t.at({n, c, y, x}));
  return img;
}

Tensor image_from(int h, int w, const std::function<double(int, int)>& f, Dtype d = Dtype::F64) {
  std::vector<double> v;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v.push_back(f(y, x));
  return Tensor::from_values({1, 1, h, w}, v, d);
}

Tensor bands_image(double nir, double red, double green, double swir) {
  std::vector<double> v(13, 0.5);
  v[7] = nir;
  v[3] = red;
  v[2] = green;
  v[10] = swir;
  return Tensor::from_values({1, 13, 1, 1}, v, Dtype::F64);
}

TEST(Ndi, WorkedValuesAndConventions) {
  BandMap bands;
  Tensor ndi = compute_ndi(bands_image(0.8, 0.2, 0.1, 0.3), bands);
  EXPECT_EQ(ndi.shape(), (Shape{1, 3, 1, 1}));
  EXPECT_NEAR(ndi.at({0, 0, 0, 0}), 0.6, 1e-15);
  Tensor eq = compute_ndi(bands_image(0.4, 0.4, 0.4, 0.4), bands);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(eq.at({0, c, 0, 0}), 0.0);
  EXPECT_EQ(compute_ndi(bands_image(0.0, 0.0, 0.0, 0.0), bands).at({0, 0, 0, 0}), 0.0);
  EXPECT_EQ(normalized_difference(0.3, 0.7), -normalized_difference(0.7, 0.3));
}

TEST(Ndi, RangeAndBandValidation) {
  Tensor img = random_tensor({2, 13, 16, 16}, 3, Dtype::F32, 0.0, 1.0);
  for (float v : compute_ndi(img, {}).data<float>()) {
    ASSERT_GE(v, -1.0f);
    ASSERT_LE(v, 1.0f);
  }
  try {
    compute_ndi(random_tensor({1, 2, 4, 4}, 1), {});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Geometry);
  }
  BandMap dup;
  dup.red = dup.nir;
  EXPECT_THROW(compute_ndi(img, dup), Error);
}

TEST(Grayscale, MeanOverChannels) {
  Tensor one = random_tensor({1, 1, 3, 3}, 2);
  EXPECT_TRUE(grayscale_reduce(one).bitwise_equal(one));
  Tensor two = Tensor::from_values({1, 2, 1, 1}, std::vector<double>{0.2, 0.4}, Dtype::F64);
  EXPECT_NEAR(grayscale_reduce(two).item(), 0.3, 1e-15);
  Tensor abc = Tensor::from_values({1, 3, 1, 1}, std::vector<double>{0.1, 0.7, 0.25}, Dtype::F64);
  Tensor cab = Tensor::from_values({1, 3, 1, 1}, std::vector<double>{0.25, 0.1, 0.7}, Dtype::F64);
  EXPECT_NEAR(grayscale_reduce(abc).item(), grayscale_reduce(cab).item(), 1e-16);
}

TEST(Hog, ConstantImageIsZero) {
  Tensor h = compute_hog(Tensor::full({1, 2, 16, 16}, 0.7, Dtype::F64), {});
  EXPECT_EQ(h.shape(), (Shape{1, 2, 2, 2, 9}));
  for (double v : h.to_vector()) EXPECT_EQ(v, 0.0);
}

TEST(Hog, VerticalStepEdgeVotesIntoBinZero) {
  Tensor img = image_from(16, 16, [](int, int x) { return x >= 4 ? 1.0 : 0.0; });
  Tensor h = compute_hog(img, {});
  double norm = 0;
  for (int b = 0; b < 9; ++b) norm += h.at({0, 0, 0, 0, b}) * h.at({0, 0, 0, 0, b});
  EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-9);
  EXPECT_NEAR(h.at({0, 0, 0, 0, 0}), 1.0, 1e-9);
  for (int b = 0; b < 9; ++b) EXPECT_EQ(h.at({0, 0, 0, 1, b}), 0.0);
}

TEST(Hog, MatchesScalarOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Tensor img = random_tensor({1, 2, 32, 32}, 500 + seed, Dtype::F32, 0.0, 1.0);
    Tensor h = compute_hog(img, {});
    for (int c = 0; c < 2; ++c) {
      auto ref = oracle::hog(channel_of(img, 0, c), 8, 9);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        ASSERT_NEAR(h.flat(static_cast<std::int64_t>(c * ref.size() + i)), ref[i], 1e-6) << "seed " << seed;
      }
    }
  }
}

TEST(Hog, RotationShiftsBinsByHalf) {
  HogParams p;
  p.n_bins = 8;
  Tensor img = random_tensor({1, 1, 32, 32}, 77, Dtype::F64, 0.0, 1.0);
  // rot[y][x] = img[x][31 - y]
  Tensor rot = image_from(32, 32, [&](int y, int x) { return img.at({0, 0, x, 31 - y}); });
  Tensor a = compute_hog(img, p), b = compute_hog(rot, p);
  for (int cy = 1; cy < 3; ++cy) {
    for (int cx = 1; cx < 3; ++cx) {
      // rotated cell (cy, cx) covers original cell (cx, 3 - cy)
      for (int bin = 0; bin < 8; ++bin) {
        EXPECT_NEAR(b.at({0, 0, cy, cx, bin}), a.at({0, 0, cx, 3 - cy, (bin + 4) % 8}), 1e-9);
      }
    }
  }
}

TEST(Hog, InvariantToShiftAndPositiveScale) {
  Tensor img = random_tensor({1, 1, 16, 16}, 8, Dtype::F64, 0.0, 1.0);
  std::vector<double> v = img.to_vector();
  for (double& x : v) x = 3.0 * x + 0.5;
  Tensor moved = Tensor::from_values(img.shape(), v, Dtype::F64);
  Tensor a = compute_hog(img, {}), b = compute_hog(moved, {});
  for (std::int64_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.flat(i), b.flat(i), 1e-6);
}

TEST(Hog, RejectsIndivisibleImage) {
  try {
    compute_hog(Tensor::zeros({1, 1, 20, 16}), {});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Geometry);
  }
}

TEST(Canny, ConstantImageHasNoEdges) {
  Tensor e = compute_canny(Tensor::full({1, 1, 32, 32}, 0.3), {});
  for (float v : e.data<float>()) EXPECT_EQ(v, 0.0f);
}

TEST(Canny, CenteredSquareMatchesOracle) {
  Tensor img = image_from(64, 64, [](int y, int x) { return (y >= 24 && y < 40 && x >= 24 && x < 40) ? 1.0 : 0.0; });
  Tensor e = compute_canny(img, {});
  auto ref = oracle::canny(channel_of(img, 0, 0));
  int count = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ASSERT_EQ(e.flat(static_cast<std::int64_t>(i)), ref[i]) << "pixel " << i;
    count += ref[i];
  }
  EXPECT_GT(count, 40);
  EXPECT_EQ(e.at({0, 0, 10, 10}), 0.0);
  EXPECT_EQ(e.at({0, 0, 32, 32}), 0.0);
}

TEST(Canny, BinaryOutputAndOracleOnNoise) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Tensor img = random_tensor({1, 2, 64, 64}, 900 + seed, Dtype::F32, 0.0, 1.0);
    Tensor e = compute_canny(img, {});
    for (int c = 0; c < 2; ++c) {
      auto ref = oracle::canny(channel_of(img, 0, c));
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const double v = e.flat(static_cast<std::int64_t>(c * ref.size() + i));
        ASSERT_TRUE(v == 0.0 || v == 1.0);
        ASSERT_EQ(v, ref[i]);
      }
    }
  }
}

TEST(Canny, RejectsTinyImage) { EXPECT_THROW(compute_canny(Tensor::zeros({1, 1, 4, 8}), {}), Error); }

TEST(Sift, GridCountAndConstantImage) {
  SiftParams p;
  EXPECT_EQ(sift_grid(224, 224, p).count(), 729);
  Tensor d = compute_dense_sift(Tensor::full({1, 2, 32, 32}, 0.4), p);
  EXPECT_EQ(d.shape(), (Shape{1, 9, 128}));
  for (float v : d.data<float>()) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(sift_grid(12, 40, p), Error);
}

TEST(Sift, MatchesOracleAndClipBound) {
  Tensor img = random_tensor({1, 3, 40, 48}, 31, Dtype::F64, 0.0, 1.0);
  SiftParams p;
  Tensor d = compute_dense_sift(img, p);
  const SiftGrid g = sift_grid(40, 48, p);
  oracle::Image gray = channel_of(grayscale_reduce(img), 0, 0);
  for (std::int64_t gy = 0; gy < g.rows; ++gy) {
    for (std::int64_t gx = 0; gx < g.cols; ++gx) {
      auto ref = oracle::sift_descriptor(gray, static_cast<int>(gy * 8), static_cast<int>(gx * 8));
      double norm = 0, peak = 0;
      for (int k = 0; k < 128; ++k) {
        const double v = d.at({0, gy * g.cols + gx, k});
        ASSERT_NEAR(v, ref[k], 1e-9);
        norm += v * v;
        peak = std::max(peak, v);
      }
      EXPECT_LE(std::sqrt(norm), 1.0 + 1e-6);
      // Before renormalisation entries were at most 0.2 of a unit vector,
      // so afterwards they are at most 0.2 / (norm of the clipped vector) <= 0.2 * sqrt(128).
      EXPECT_LE(peak, 0.2 * std::sqrt(128.0));
    }
  }
}

TEST(Patchify, GeometryAndRoundTrip) {
  EXPECT_EQ(patch_grid(224, 224, 16).count(), 196);
  Tensor img = random_tensor({2, 2, 32, 48}, 4, Dtype::F32);
  Tensor p = patchify(img, 16);
  EXPECT_EQ(p.shape(), (Shape{2, 6, 512}));
  EXPECT_EQ(p.at({1, 4, 256 + 16 * 3 + 5}), img.at({1, 1, 16 + 3, 16 + 5}));
  EXPECT_TRUE(unpatchify(p, 16, 2, patch_grid(32, 48, 16)).bitwise_equal(img));
  EXPECT_THROW(patchify(img, 10), Error);
}

TEST(Targets, WidthsPerFeature) {
  FeatureSpec s;
  s.kind = FeatureKind::Hog;
  EXPECT_EQ(s.target_widths(2, 16), std::vector<std::int64_t>{72});
  s.kind = FeatureKind::Ndi;
  EXPECT_EQ(s.target_widths(13, 16), std::vector<std::int64_t>{768});
  s.kind = FeatureKind::DenseSift;
  EXPECT_EQ(s.target_widths(2, 16), std::vector<std::int64_t>{512});
  s.kind = FeatureKind::HogPlusNdi;
  EXPECT_EQ(s.target_widths(13, 16), (std::vector<std::int64_t>{468, 768}));
  EXPECT_THROW(s.target_widths(2, 16), Error);
  s.kind = FeatureKind::RawPixels;
  EXPECT_EQ(s.target_widths(2, 16), std::vector<std::int64_t>{512});
  EXPECT_EQ(parse_feature("hog+ndi"), FeatureKind::HogPlusNdi);
  EXPECT_THROW(parse_feature("pixels"), Error);
}

TEST(Targets, AssembledShapesMatchWidths) {
  Tensor sar = random_tensor({2, 2, 32, 32}, 5, Dtype::F32, 0.0, 1.0);
  Tensor ms = random_tensor({1, 13, 32, 32}, 6, Dtype::F32, 0.0, 1.0);
  for (FeatureKind k : {FeatureKind::RawPixels, FeatureKind::CannyEdge, FeatureKind::Hog, FeatureKind::DenseSift}) {
    FeatureSpec s;
    s.kind = k;
    TargetTensor t = assemble_targets(sar, s, 16);
    ASSERT_EQ(t.values.size(), 1u);
    EXPECT_EQ(t.values[0].shape(), (Shape{2, 4, s.target_widths(2, 16)[0]})) << feature_name(k);
    EXPECT_TRUE(t.values[0].all_finite());
  }
  FeatureSpec dual;
  dual.kind = FeatureKind::HogPlusNdi;
  TargetTensor t = assemble_targets(ms, dual, 16);
  ASSERT_EQ(t.values.size(), 2u);
  EXPECT_EQ(t.values[1].shape(), (Shape{1, 4, 768}));
  EXPECT_FALSE(t.patch_normalized);
}

TEST(Targets, ConstantRawPatchNormalizesToZero) {
  Tensor img = Tensor::full({1, 2, 16, 16}, 0.8);
  FeatureSpec s;
  s.kind = FeatureKind::RawPixels;
  TargetTensor t = assemble_targets(img, s, 8);
  EXPECT_TRUE(t.patch_normalized);
  for (float v : t.values[0].data<float>()) EXPECT_EQ(v, 0.0f);
  Tensor row = Tensor::from_values({1, 1, 4}, std::vector<double>{1, 2, 3, 4}, Dtype::F64);
  Tensor n = normalize_patches(row);
  const double sd = std::sqrt(1.25);
  EXPECT_NEAR(n.flat(0), -1.5 / (sd + 1e-6), 1e-15);
}

TEST(Targets, HogPatchOrdering) {
  Tensor img = random_tensor({1, 2, 32, 32}, 12, Dtype::F64, 0.0, 1.0);
  Tensor hog = compute_hog(img, {});
  Tensor t = hog_patch_targets(hog, 16, 8);
  EXPECT_EQ(t.shape(), (Shape{1, 4, 72}));
  // patch 3 = (row 1, col 1); channel 1, cell (1, 0), bin 4
  EXPECT_EQ(t.at({0, 3, 36 + (1 * 2 + 0) * 9 + 4}), hog.at({0, 1, 3, 2, 4}));
}

TEST(Targets, SiftSlots) {
  SiftParams p;
  Tensor img = random_tensor({1, 1, 32, 32}, 13, Dtype::F64, 0.0, 1.0);
  Tensor d = compute_dense_sift(img, p);
  const SiftGrid g = sift_grid(32, 32, p);
  Tensor t = sift_patch_targets(d, g, 32, 32, 16, p);
  EXPECT_EQ(t.shape(), (Shape{1, 4, 512}));
  // Window (0,0) has centre (8,8): patch 0, slot 3. Window (1,1) centre (16,16): patch 3, slot 0.
  for (int k = 0; k < 128; ++k) {
    EXPECT_EQ(t.at({0, 0, 3 * 128 + k}), d.at({0, 0, k}));
    EXPECT_EQ(t.at({0, 3, k}), d.at({0, 4, k}));
    EXPECT_EQ(t.at({0, 0, k}), 0.0);
  }
}

}  // namespace
}  // namespace fgmae
