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
#include <string>
#include <vector>

#include "fgmae/data/manifest.hpp"
#include "fgmae/model/model.hpp"
#include "fgmae/tensor/rng.hpp"

namespace fgmae {

enum class TaskKind { SingleLabel, MultiLabel };

const char* task_name(TaskKind t) noexcept;
TaskKind parse_task(const std::string& s);

struct ProbeConfig {
  TaskKind task = TaskKind::SingleLabel;
  int num_classes = 0;  // 0 infers max label + 1
  int epochs = 100;
  int batch = 32;
  double lr = 0.1;
  double momentum = 0.9;    // probe SGD
  double weight_decay = 0.0;
  double layer_decay = 0.75;  // fine-tune only
  double mixup_alpha = 0.8;   // fine-tune only
  double clip_norm = 0.0;        // fine-tune only; 0 disables
  double label_smoothing = 0.0;  // fine-tune only; 0 disables
  int warmup_epochs = 0;
  double train_fraction = 0.5;  // share of locations used for training
  std::uint64_t seed = 0;

  static ProbeConfig fine_tune_defaults();
  void validate() const;
};

struct ClassMetric {
  int cls = 0;
  double ap = 0.0;      // multi-label
  double f1 = 0.0;      // multi-label
  double recall = 0.0;  // single-label and segmentation
  double iou = 0.0;     // segmentation
};

// Unused fields stay NaN.
struct MetricsReport {
  std::string task;  // "singlelabel", "multilabel" or "segmentation"
  int num_classes = 0;
  std::int64_t train_samples = 0;
  std::int64_t test_samples = 0;
  double oa;
  double aa;
  double map;
  double f1;
  double miou;
  std::vector<ClassMetric> per_class;

  MetricsReport();
  // OA for single-label and segmentation, mAP for multi-label.
  double primary() const;
  const char* primary_name() const;
};

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& r, const std::string& digest);
void write_per_class_csv(const std::filesystem::path& path, const MetricsReport& r, const std::string& digest);

struct LabeledSet {
  Tensor images;  // N x C x W x W in the model dtype
  std::vector<std::vector<int>> labels;
  std::vector<std::string> locations;
  int num_classes = 0;
};

// Every manifest scene becomes a sample, resized to the model input and
// zero-padded to its channel count.
LabeledSet load_labeled_set(const SceneManifest& manifest, const ModelConfig& model, TaskKind task, int num_classes);

struct Split {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> test;
};

// Partitions samples by location so no location appears on both sides.
Split split_by_location(const std::vector<std::string>& sample_locations, double train_fraction, Rng rng);

Tensor take_rows(const Tensor& t, const std::vector<std::int64_t>& rows);

// Mean-pooled encoder tokens with nothing masked, N x K_en in f64.
Tensor encode_pooled(const FgMaeModel& model, const Tensor& images, std::int64_t batch = 16);

struct LinearClassifier {
  Tensor weight;  // D x K
  Tensor bias;    // K
  std::vector<double> mean;
  std::vector<double> inv_std;

  Tensor logits(const Tensor& features) const;
};

// Trains on z-scored features with SGD; softmax cross-entropy or one-vs-all logistic.
LinearClassifier train_linear_classifier(const Tensor& features, const Tensor& targets, TaskKind task,
                                         const ProbeConfig& cfg, Rng rng);

Tensor label_matrix(const std::vector<std::vector<int>>& labels, int num_classes);
MetricsReport score_predictions(const Tensor& logits, const std::vector<std::vector<int>>& labels, TaskKind task,
                                int num_classes);

struct TransferResult {
  MetricsReport report;
  std::string encoder_digest_before;
  std::string encoder_digest_after;
};

std::string encoder_digest(const FgMaeModel& model);

TransferResult linear_probe_train(const FgMaeModel& model, const SceneManifest& manifest, const ProbeConfig& cfg);

// Learning-rate scale per model parameter: decay^(depth + 1 - layer).
std::vector<double> fine_tune_lr_scales(const FgMaeModel& model, double layer_decay);

// Updates the encoder of `model` in place together with a fresh linear head.
TransferResult fine_tune(FgMaeModel& model, const SceneManifest& manifest, const ProbeConfig& cfg);

// Per-patch linear classifier on frozen encoder tokens, scored against the
// location masks (masks/<location>.fgmr) resized to the model input.
TransferResult segmentation_probe(const FgMaeModel& model, const SceneManifest& manifest, const ProbeConfig& cfg);

}  // namespace fgmae
