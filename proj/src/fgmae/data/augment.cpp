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

#include "fgmae/data/augment.hpp"

#include <algorithm>
#include <cmath>

#include "fgmae/core/error.hpp"

namespace fgmae {
namespace {

void require_chw(const Tensor& image, const char* op) {
  require(image.rank() == 3, ErrorKind::Shape, std::string(op) + " expects C x H x W, got " + shape_str(image.shape()));
}

}  // namespace

void AugmentationConfig::validate() const {
  require(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0, ErrorKind::Config,
          "crop scale range must satisfy 0 < min <= max <= 1");
  require(ratio_min > 0.0 && ratio_min <= ratio_max, ErrorKind::Config, "crop aspect range must satisfy 0 < min <= max");
  require(out_size >= 1, ErrorKind::Config, "output size must be positive");
  require(flip_prob >= 0.0 && flip_prob <= 1.0, ErrorKind::Config, "flip probability must lie in [0, 1]");
  require(mixup_alpha >= 0.0, ErrorKind::Config, "mixup alpha must be non-negative");
}

CropBox sample_crop(int height, int width, const AugmentationConfig& cfg, Rng& rng) {
  cfg.validate();
  const double area = static_cast<double>(height) * width;
  const double log_lo = std::log(cfg.ratio_min), log_hi = std::log(cfg.ratio_max);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * (cfg.scale_min == cfg.scale_max ? cfg.scale_min : rng.uniform(cfg.scale_min, cfg.scale_max));
    const double aspect = std::exp(log_lo == log_hi ? log_lo : rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w > 0 && h > 0 && w <= width && h <= height) {
      CropBox box;
      box.height = h;
      box.width = w;
      box.top = static_cast<int>(rng.uniform_int(height - h + 1));
      box.left = static_cast<int>(rng.uniform_int(width - w + 1));
      return box;
    }
  }
  const double in_ratio = static_cast<double>(width) / height;
  CropBox box{0, 0, height, width};
  if (in_ratio < cfg.ratio_min) {
    box.height = static_cast<int>(std::lround(width / cfg.ratio_min));
  } else if (in_ratio > cfg.ratio_max) {
    box.width = static_cast<int>(std::lround(height * cfg.ratio_max));
  }
  box.top = (height - box.height) / 2;
  box.left = (width - box.width) / 2;
  return box;
}

Tensor crop(const Tensor& image, const CropBox& box) {
  require_chw(image, "crop");
  const auto c = image.dim(0), h = image.dim(1), w = image.dim(2);
  require(box.top >= 0 && box.left >= 0 && box.height > 0 && box.width > 0 && box.top + box.height <= h &&
              box.left + box.width <= w,
          ErrorKind::Geometry, "crop window outside the image");
  return visit_dtype(image.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = image.data<T>();
    std::vector<T> out(static_cast<std::size_t>(c) * box.height * box.width);
    std::size_t k = 0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      for (int y = 0; y < box.height; ++y) {
        const T* row = src.data() + (ch * h + box.top + y) * w + box.left;
        for (int x = 0; x < box.width; ++x) out[k++] = row[x];
      }
    }
    return Tensor::from_vector({c, box.height, box.width}, std::move(out));
  });
}

Tensor resize_bilinear(const Tensor& image, int out_h, int out_w) {
  require_chw(image, "resize_bilinear");
  require(out_h > 0 && out_w > 0, ErrorKind::InvalidArgument, "resize target must be positive");
  const auto c = image.dim(0), h = image.dim(1), w = image.dim(2);

  struct Tap {
    std::int64_t i0, i1;
    double f;
  };
  auto taps = [](std::int64_t in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int d = 0; d < out; ++d) {
      double s = (d + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::int64_t>(std::floor(s));
      const auto i1 = std::min(i0 + 1, in - 1);
      t[static_cast<std::size_t>(d)] = {i0, i1, s - static_cast<double>(i0)};
    }
    return t;
  };
  const auto ty = taps(h, out_h);
  const auto tx = taps(w, out_w);

  return visit_dtype(image.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = image.data<T>();
    std::vector<T> out(static_cast<std::size_t>(c) * out_h * out_w);
    std::size_t k = 0;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T* plane = src.data() + ch * h * w;
      for (const Tap& a : ty) {
        for (const Tap& b : tx) {
          const double top = plane[a.i0 * w + b.i0] * (1.0 - b.f) + plane[a.i0 * w + b.i1] * b.f;
          const double bot = plane[a.i1 * w + b.i0] * (1.0 - b.f) + plane[a.i1 * w + b.i1] * b.f;
          out[k++] = static_cast<T>(top * (1.0 - a.f) + bot * a.f);
        }
      }
    }
    return Tensor::from_vector({c, out_h, out_w}, std::move(out));
  });
}

Tensor random_resized_crop(const Tensor& image, const AugmentationConfig& cfg, Rng& rng) {
  require_chw(image, "random_resized_crop");
  const CropBox box = sample_crop(static_cast<int>(image.dim(1)), static_cast<int>(image.dim(2)), cfg, rng);
  return resize_bilinear(crop(image, box), cfg.out_size, cfg.out_size);
}

Tensor flip_width(const Tensor& image) {
  require(image.rank() >= 1, ErrorKind::Shape, "flip of a scalar");
  const auto w = image.shape().back();
  const auto rows = image.numel() / std::max<std::int64_t>(w, 1);
  return visit_dtype(image.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = image.data<T>();
    std::vector<T> out(src.begin(), src.end());
    for (std::int64_t r = 0; r < rows; ++r) std::reverse(out.begin() + r * w, out.begin() + (r + 1) * w);
    return Tensor::from_vector(image.shape(), std::move(out));
  });
}

Tensor horizontal_flip(const Tensor& image, double prob, Rng& rng) {
  const double u = rng.uniform();
  return u < prob ? flip_width(image) : image;
}

MixupBatch mixup(const Tensor& images, const Tensor& labels, double alpha, Rng& rng) {
  require(alpha > 0.0, ErrorKind::InvalidArgument, "mixup alpha must be positive");
  require(images.rank() >= 1, ErrorKind::Shape, "mixup needs a batch axis");
  const double lambda = rng.beta(alpha, alpha);
  return mixup_with(images, labels, lambda, rng.permutation(images.dim(0)));
}

MixupBatch mixup_with(const Tensor& images, const Tensor& labels, double lambda,
                      const std::vector<std::int64_t>& permutation) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::InvalidArgument, "mixup lambda outside [0, 1]");
  require(images.rank() >= 1 && labels.rank() == 2, ErrorKind::Shape, "mixup expects images B x ... and labels B x K");
  const auto b = images.dim(0);
  require(labels.dim(0) == b && static_cast<std::int64_t>(permutation.size()) == b, ErrorKind::Shape,
          "mixup batch sizes disagree");
  auto mix = [&](const Tensor& t) {
    const auto row = t.numel() / b;
    return visit_dtype(t.dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto src = t.data<T>();
      std::vector<T> out(src.size());
      for (std::int64_t i = 0; i < b; ++i) {
        const T* x = src.data() + i * row;
        const T* y = src.data() + permutation[static_cast<std::size_t>(i)] * row;
        T* o = out.data() + i * row;
        for (std::int64_t j = 0; j < row; ++j) o[j] = static_cast<T>(lambda * x[j] + (1.0 - lambda) * y[j]);
      }
      return Tensor::from_vector(t.shape(), std::move(out));
    });
  };
  return {mix(images), mix(labels), lambda, permutation};
}

Tensor zero_pad_channels(const Tensor& image, int target_channels, const std::vector<int>& destination) {
  require_chw(image, "zero_pad_channels");
  const auto c = image.dim(0);
  require(c <= target_channels, ErrorKind::Geometry,
          "cannot pad " + std::to_string(c) + " channels to " + std::to_string(target_channels));
  std::vector<int> dest = destination;
  if (dest.empty()) {
    for (int i = 0; i < c; ++i) dest.push_back(i);
  }
  require(static_cast<std::int64_t>(dest.size()) == c, ErrorKind::InvalidArgument, "channel mapping length mismatch");
  std::vector<bool> used(static_cast<std::size_t>(target_channels), false);
  for (int d : dest) {
    require(d >= 0 && d < target_channels && !used[static_cast<std::size_t>(d)], ErrorKind::InvalidArgument,
            "channel mapping must be distinct indices below the target count");
    used[static_cast<std::size_t>(d)] = true;
  }
  const auto plane = image.dim(1) * image.dim(2);
  return visit_dtype(image.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto src = image.data<T>();
    std::vector<T> out(static_cast<std::size_t>(target_channels * plane), T{0});
    for (std::int64_t i = 0; i < c; ++i) {
      std::copy(src.begin() + i * plane, src.begin() + (i + 1) * plane, out.begin() + dest[static_cast<std::size_t>(i)] * plane);
    }
    return Tensor::from_vector({target_channels, image.dim(1), image.dim(2)}, std::move(out));
  });
}

}  // namespace fgmae
