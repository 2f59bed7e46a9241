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

#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

struct ApReport {
  double map = 0.0;
  std::vector<double> per_class;  // NaN for excluded classes
  std::vector<int> excluded;      // classes without a positive
};

// scores and labels are N x K; labels hold 0/1. Precision is averaged at the
// rank of every positive; ranks sort scores descending, ties by ascending index.
ApReport metric_map(const Tensor& scores, const Tensor& labels);
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

struct F1Report {
  double macro = 0.0;
  std::vector<double> per_class;
};

// pred and labels are N x K with 0/1 entries; F1 is 0 when P + R = 0.
F1Report metric_f1(const Tensor& pred, const Tensor& labels);
Tensor threshold(const Tensor& scores, double at = 0.5);

struct AccuracyReport {
  double oa = 0.0;
  double aa = 0.0;
  std::vector<double> per_class;  // recall; NaN for classes absent from the labels
};

AccuracyReport metric_oa_aa(const std::vector<int>& pred, const std::vector<int>& labels);

struct SegmentationReport {
  double oa = 0.0;
  double aa = 0.0;
  double miou = 0.0;
  std::vector<double> iou;  // NaN where the union is empty
};

// Flattened masks; pixels whose label or prediction is ignore_index are dropped.
SegmentationReport metric_miou(const std::vector<int>& pred, const std::vector<int>& labels, int n_classes,
                               int ignore_index = -1);

}  // namespace fgmae
