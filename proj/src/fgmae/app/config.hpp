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

#include "fgmae/data/synth.hpp"
#include "fgmae/engine/pretrain.hpp"
#include "fgmae/eval/ablation.hpp"
#include "fgmae/eval/transfer.hpp"

namespace fgmae {

struct AblationSettings {
  std::vector<std::string> features{"raw", "hog"};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool random_init = true;
};

// One JSON document drives every subcommand. Unknown keys are rejected and
// every section is optional.
struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_given = false;  // false when the document has no "seed" key
  bool synth_seed_given = false;
  bool deterministic = true;
  PretrainConfig pretrain;
  ProbeConfig probe;
  ProbeConfig finetune = ProbeConfig::fine_tune_defaults();
  DatasetSpec synth;
  std::string manifest;        // pretraining scenes; relative paths resolve against base_dir
  std::string probe_manifest;  // labeled scenes; defaults to manifest
  AblationSettings ablation;
  std::filesystem::path base_dir;

  // Pushes the run seed into every section and derives head widths.
  void finalize();
  // Replaces the run seed (and the synth seed unless set explicitly).
  void set_seed(std::uint64_t s);
  void validate() const;
  std::filesystem::path manifest_path() const;
  std::filesystem::path probe_manifest_path() const;
  AblationConfig ablation_config() const;
};

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical JSON of the resolved config (every field, fixed key order).
std::string run_config_json(const RunConfig& cfg);
std::string config_digest(const RunConfig& cfg);

}  // namespace fgmae
