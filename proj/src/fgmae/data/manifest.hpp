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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fgmae/tensor/rng.hpp"

namespace fgmae {

enum class Modality { MS, SAR };

const char* modality_name(Modality m) noexcept;
Modality parse_modality(const std::string& s);

struct ManifestEntry {
  std::string location_id;
  int season = 0;  // 0..3
  Modality modality = Modality::MS;
  std::string path;  // relative to the manifest directory unless absolute
  std::string label;  // empty, "3" (single label) or "0;4;6" (multi-label)
};

// CSV with header `location_id,season,modality,path,label`. Locations keep
// the order of their first appearance.
class SceneManifest {
 public:
  SceneManifest() = default;
  explicit SceneManifest(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

  static SceneManifest load(const std::filesystem::path& csv, bool check_paths = true);
  void save(const std::filesystem::path& csv) const;

  void add(ManifestEntry e);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  const std::vector<std::string>& locations() const { return locations_; }
  std::vector<const ManifestEntry*> scenes_at(const std::string& location_id) const;
  std::filesystem::path resolve(const ManifestEntry& e) const;
  const std::filesystem::path& base_dir() const { return base_dir_; }

 private:
  std::filesystem::path base_dir_;
  std::vector<ManifestEntry> entries_;
  std::vector<std::string> locations_;
};

// Uniform choice among the seasons recorded for a location.
const ManifestEntry& select_season(const SceneManifest& manifest, const std::string& location_id,
                                   Rng& rng);

int parse_single_label(const std::string& label);
std::vector<int> parse_multi_label(const std::string& label);
std::string format_multi_label(const std::vector<int>& classes);

}  // namespace fgmae
