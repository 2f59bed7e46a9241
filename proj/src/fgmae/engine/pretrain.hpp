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
#include <string>
#include <vector>

#include "fgmae/data/augment.hpp"
#include "fgmae/data/manifest.hpp"
#include "fgmae/engine/checkpoint.hpp"
#include "fgmae/features/features.hpp"
#include "fgmae/model/model.hpp"
#include "fgmae/tensor/optim.hpp"

namespace fgmae {

struct PretrainConfig {
  ModelConfig model;
  FeatureSpec feature;
  AugmentationConfig augment;
  bool augment_enabled = true;
  int epochs = 50;
  int batch = 8;
  double base_lr = 1.5e-4;
  double min_lr = 0.0;
  int warmup_epochs = 5;
  double weight_decay = 0.05;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
  std::uint64_t seed = 0;
  bool deterministic = true;
  std::int64_t checkpoint_every = 0;  // steps; 0 writes only the final checkpoint

  // Derives head widths from the feature and fixes the crop size to the model input.
  void finalize();
  void validate() const;
};

struct PreparedBatch {
  std::vector<std::string> locations;
  Tensor images;  // augmented, B x C x H x W in the model dtype
  TargetTensor targets;
  MaskPlan plan;
};

class Pretrainer {
 public:
  Pretrainer(PretrainConfig cfg, SceneManifest manifest, std::string config_digest = "",
             std::string config_json = "");

  std::int64_t steps_per_epoch() const { return steps_per_epoch_; }
  std::int64_t total_steps() const { return steps_per_epoch_ * cfg_.epochs; }
  std::int64_t next_step() const { return step_; }
  bool done() const { return step_ >= total_steps(); }

  // Season choice, augmentation, targets from the augmented view and the mask
  // plan for a given step; a pure function of (seed, step).
  PreparedBatch prepare(std::int64_t step) const;

  const LossEntry& step();
  void run_until(std::int64_t step);

  CheckpointState checkpoint_state() const;
  // Restores parameters, moments and history; names and shapes must match.
  void restore(const CheckpointState& state);

  const PretrainConfig& config() const { return cfg_; }
  const FgMaeModel& model() const { return model_; }
  FgMaeModel& model() { return model_; }
  const std::vector<LossEntry>& log() const { return log_; }
  std::vector<double> epoch_means() const;
  double lr_for(std::int64_t step) const;

 private:
  PretrainConfig cfg_;
  SceneManifest manifest_;
  std::string digest_;
  std::string config_json_;
  FgMaeModel model_;
  AdamW optimizer_;
  LrSchedule schedule_;
  std::int64_t steps_per_epoch_ = 0;
  std::int64_t step_ = 0;
  std::vector<LossEntry> log_;
};

struct PretrainResult {
  std::vector<LossEntry> log;
  std::vector<double> epoch_means;
  std::filesystem::path checkpoint;
};

// Runs to completion (optionally resuming from a checkpoint directory) and
// writes out/loss.csv, out/epoch_loss.csv and out/checkpoint.
PretrainResult pretrain_run(const PretrainConfig& cfg, const SceneManifest& manifest, const std::filesystem::path& out,
                            const std::string& config_digest = "", const std::string& config_json = "",
                            const std::optional<std::filesystem::path>& resume = std::nullopt);

// Copies checkpoint parameters into `model`; names and shapes must match.
void load_parameters(FgMaeModel& model, const CheckpointState& state);
FgMaeModel model_from_checkpoint(const ModelConfig& config, const CheckpointState& state);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossEntry>& log, const std::string& digest);

// Stacks C x H x W images into a batch, zero-padding channels up to `channels`.
Tensor stack_images(const std::vector<Tensor>& images, std::int64_t channels, Dtype dtype);

}  // namespace fgmae
