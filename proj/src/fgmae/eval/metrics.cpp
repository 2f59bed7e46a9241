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

#include "fgmae/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fgmae/core/error.hpp"

namespace fgmae {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_matrix(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && a.shape() == b.shape(), ErrorKind::Shape,
          "metric inputs must be matching N x K matrices, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

bool is_positive(double v) { return v > 0.5; }

}  // namespace

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  require(scores.size() == labels.size(), ErrorKind::Shape, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::int64_t hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 0) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  require(hits > 0, ErrorKind::InvalidArgument, "average precision needs at least one positive");
  return sum / static_cast<double>(hits);
}

ApReport metric_map(const Tensor& scores, const Tensor& labels) {
  require_matrix(scores, labels);
  const std::int64_t n = scores.dim(0), k = scores.dim(1);
  const auto s = scores.to_vector(), y = labels.to_vector();
  ApReport r;
  double sum = 0.0;
  int counted = 0;
  for (std::int64_t c = 0; c < k; ++c) {
    std::vector<double> col(static_cast<std::size_t>(n));
    std::vector<int> pos(static_cast<std::size_t>(n));
    bool any = false;
    for (std::int64_t i = 0; i < n; ++i) {
      col[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i * k + c)];
      pos[static_cast<std::size_t>(i)] = is_positive(y[static_cast<std::size_t>(i * k + c)]) ? 1 : 0;
      any = any || pos[static_cast<std::size_t>(i)] != 0;
    }
    if (!any) {
      r.per_class.push_back(kNaN);
      r.excluded.push_back(static_cast<int>(c));
      continue;
    }
    r.per_class.push_back(average_precision(col, pos));
    sum += r.per_class.back();
    ++counted;
  }
  require(counted > 0, ErrorKind::InvalidArgument, "mAP undefined: no class has a positive label");
  r.map = sum / counted;
  return r;
}

Tensor threshold(const Tensor& scores, double at) {
  auto v = scores.to_vector();
  for (double& x : v) x = x >= at ? 1.0 : 0.0;
  return Tensor::from_values(scores.shape(), v, Dtype::F64);
}

F1Report metric_f1(const Tensor& pred, const Tensor& labels) {
  require_matrix(pred, labels);
  const std::int64_t n = pred.dim(0), k = pred.dim(1);
  const auto p = pred.to_vector(), y = labels.to_vector();
  F1Report r;
  for (std::int64_t c = 0; c < k; ++c) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      const bool pp = is_positive(p[static_cast<std::size_t>(i * k + c)]);
      const bool yy = is_positive(y[static_cast<std::size_t>(i * k + c)]);
      tp += pp && yy;
      fp += pp && !yy;
      fn += !pp && yy;
    }
    const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.per_class.push_back(precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0);
  }
  r.macro = k > 0 ? std::accumulate(r.per_class.begin(), r.per_class.end(), 0.0) / static_cast<double>(k) : 0.0;
  return r;
}

AccuracyReport metric_oa_aa(const std::vector<int>& pred, const std::vector<int>& labels) {
  require(pred.size() == labels.size(), ErrorKind::Shape, "predictions and labels differ in length");
  require(!labels.empty(), ErrorKind::InvalidArgument, "accuracy of an empty set");
  const int k = 1 + std::max(*std::max_element(labels.begin(), labels.end()), *std::max_element(pred.begin(), pred.end()));
  require(*std::min_element(labels.begin(), labels.end()) >= 0 && *std::min_element(pred.begin(), pred.end()) >= 0,
          ErrorKind::InvalidArgument, "class ids must be non-negative");
  std::vector<std::int64_t> correct(static_cast<std::size_t>(k), 0), total(static_cast<std::size_t>(k), 0);
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++total[c];
    if (pred[i] == labels[i]) {
      ++correct[c];
      ++hits;
    }
  }
  AccuracyReport r;
  r.oa = static_cast<double>(hits) / static_cast<double>(labels.size());
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    const auto i = static_cast<std::size_t>(c);
    if (total[i] == 0) {
      r.per_class.push_back(kNaN);
      continue;
    }
    r.per_class.push_back(static_cast<double>(correct[i]) / static_cast<double>(total[i]));
    sum += r.per_class.back();
    ++present;
  }
  r.aa = sum / present;
  return r;
}

SegmentationReport metric_miou(const std::vector<int>& pred, const std::vector<int>& labels, int n_classes,
                               int ignore_index) {
  require(pred.size() == labels.size(), ErrorKind::Shape, "prediction and label masks differ in size");
  require(n_classes >= 1, ErrorKind::InvalidArgument, "n_classes must be >= 1");
  const auto k = static_cast<std::size_t>(n_classes);
  std::vector<std::int64_t> tp(k, 0), fp(k, 0), fn(k, 0), total(k, 0);
  std::int64_t valid = 0, hits = 0;
  auto check = [&](int v) {
    require(v == ignore_index || (v >= 0 && v < n_classes), ErrorKind::InvalidArgument,
            "mask entry " + std::to_string(v) + " outside [0, " + std::to_string(n_classes) + ")");
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check(labels[i]);
    check(pred[i]);
    if (labels[i] == ignore_index || pred[i] == ignore_index) continue;
    const auto y = static_cast<std::size_t>(labels[i]), p = static_cast<std::size_t>(pred[i]);
    ++valid;
    ++total[y];
    if (p == y) {
      ++tp[y];
      ++hits;
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  require(valid > 0, ErrorKind::InvalidArgument, "no valid pixels after removing ignore_index");
  SegmentationReport r;
  r.oa = static_cast<double>(hits) / static_cast<double>(valid);
  double iou_sum = 0.0, acc_sum = 0.0;
  int iou_n = 0, acc_n = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::int64_t uni = tp[c] + fp[c] + fn[c];
    if (uni == 0) {
      r.iou.push_back(kNaN);
    } else {
      r.iou.push_back(static_cast<double>(tp[c]) / static_cast<double>(uni));
      iou_sum += r.iou.back();
      ++iou_n;
    }
    if (total[c] > 0) {
      acc_sum += static_cast<double>(tp[c]) / static_cast<double>(total[c]);
      ++acc_n;
    }
  }
  r.miou = iou_sum / iou_n;
  r.aa = acc_sum / acc_n;
  return r;
}

}  // namespace fgmae
