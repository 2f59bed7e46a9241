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

#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

struct LossEntry {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Everything needed to continue a run bitwise: every random stream is a pure
// function of (seed, step), so the step counter is the whole RNG state.
struct CheckpointState {
  std::int64_t step = 0;
  std::int64_t optimizer_steps = 0;
  std::string config_digest;
  std::string config_json;  // canonical JSON of the run config
  std::vector<NamedTensor> params;
  std::vector<NamedTensor> moment_m;
  std::vector<NamedTensor> moment_v;
  std::vector<LossEntry> history;
};

// Directory layout: index.json, params/<name>.fgmr, optim/<name>.m.fgmr and
// optim/<name>.v.fgmr. The directory is assembled under a temporary sibling
// and renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const CheckpointState& state);
CheckpointState load_checkpoint(const std::filesystem::path& dir);

}  // namespace fgmae
