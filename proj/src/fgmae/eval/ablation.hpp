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
#include <functional>
#include <string>
#include <vector>

#include "fgmae/engine/pretrain.hpp"
#include "fgmae/eval/transfer.hpp"

namespace fgmae {

struct AblationConfig {
  PretrainConfig pretrain;
  ProbeConfig probe;
  std::vector<FeatureSpec> specs;
  std::vector<std::uint64_t> seeds;
  bool random_init = false;  // adds an unpretrained arm per seed

  void validate() const;
};

struct AblationRow {
  std::string spec;
  std::string seed;  // "mean" on summary rows
  std::string metric;
  double value = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::vector<AblationRow> summary;  // one per spec, in spec order

  double mean(const std::string& spec) const;
  double value(const std::string& spec, std::uint64_t seed) const;
};

inline constexpr const char* kRandomInitArm = "random-init";

// Distinct names per spec: the feature name, suffixed with #i on repeats.
std::vector<std::string> spec_labels(const std::vector<FeatureSpec>& specs);

using AblationProgress = std::function<void(const AblationRow&)>;

// For every (spec, seed): pretrain with that seed, then linear-probe the encoder.
AblationTable feature_ablation_study(const AblationConfig& cfg, const SceneManifest& pretrain_data,
                                     const SceneManifest& probe_data, const AblationProgress& progress = {});

void write_ablation_csv(const std::filesystem::path& path, const AblationTable& table, const std::string& digest);

}  // namespace fgmae
