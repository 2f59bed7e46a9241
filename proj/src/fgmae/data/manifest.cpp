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

#include "fgmae/data/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "fgmae/core/error.hpp"

namespace fgmae {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

const char* modality_name(Modality m) noexcept { return m == Modality::MS ? "MS" : "SAR"; }

Modality parse_modality(const std::string& s) {
  if (s == "MS") return Modality::MS;
  if (s == "SAR") return Modality::SAR;
  fail(ErrorKind::Config, "unknown modality '" + s + "' (expected MS or SAR)");
}

SceneManifest SceneManifest::load(const std::filesystem::path& csv, bool check_paths) {
  std::ifstream is(csv);
  if (!is) fail(ErrorKind::Io, "cannot open manifest " + csv.string());
  SceneManifest m(csv.parent_path());
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto cols = split(line, ',');
    if (!header_seen) {
      header_seen = true;
      if (cols.size() >= 4 && trim(cols[0]) == "location_id") continue;
      fail(ErrorKind::Config, csv.string() + ": missing header line");
    }
    if (cols.size() != 4 && cols.size() != 5) {
      fail(ErrorKind::Config, csv.string() + ":" + std::to_string(lineno) + ": expected 4 or 5 columns");
    }
    ManifestEntry e;
    e.location_id = trim(cols[0]);
    try {
      e.season = std::stoi(trim(cols[1]));
    } catch (const std::exception&) {
      fail(ErrorKind::Config, csv.string() + ":" + std::to_string(lineno) + ": bad season");
    }
    e.modality = parse_modality(trim(cols[2]));
    e.path = trim(cols[3]);
    if (cols.size() == 5) e.label = trim(cols[4]);
    if (check_paths && !std::filesystem::exists(m.resolve(e))) {
      fail(ErrorKind::Io, csv.string() + ":" + std::to_string(lineno) + ": missing scene " +
                              m.resolve(e).string());
    }
    m.add(std::move(e));
  }
  return m;
}

void SceneManifest::save(const std::filesystem::path& csv) const {
  std::ofstream os(csv, std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write manifest " + csv.string());
  os << "location_id,season,modality,path,label\n";
  for (const auto& e : entries_) {
    os << e.location_id << ',' << e.season << ',' << modality_name(e.modality) << ',' << e.path
       << ',' << e.label << '\n';
  }
  if (!os) fail(ErrorKind::Io, "write failed for " + csv.string());
}

void SceneManifest::add(ManifestEntry e) {
  require(!e.location_id.empty(), ErrorKind::Config, "manifest entry without location_id");
  require(e.season >= 0 && e.season <= 3, ErrorKind::Config,
          "season " + std::to_string(e.season) + " outside 0..3 at location " + e.location_id);
  for (char c : e.location_id + e.path + e.label) {
    require(c != ',' && c != '\n', ErrorKind::Config, "manifest fields cannot contain ',' or newlines");
  }
  for (const auto& other : entries_) {
    require(!(other.location_id == e.location_id && other.season == e.season), ErrorKind::Config,
            "duplicate season " + std::to_string(e.season) + " for location " + e.location_id);
  }
  if (std::find(locations_.begin(), locations_.end(), e.location_id) == locations_.end()) {
    locations_.push_back(e.location_id);
  }
  entries_.push_back(std::move(e));
}

std::vector<const ManifestEntry*> SceneManifest::scenes_at(const std::string& location_id) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries_) {
    if (e.location_id == location_id) out.push_back(&e);
  }
  std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->season < b->season; });
  return out;
}

std::filesystem::path SceneManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.path);
  return p.is_absolute() ? p : base_dir_ / p;
}

const ManifestEntry& select_season(const SceneManifest& manifest, const std::string& location_id,
                                   Rng& rng) {
  auto scenes = manifest.scenes_at(location_id);
  require(!scenes.empty(), ErrorKind::InvalidArgument, "unknown location '" + location_id + "'");
  if (scenes.size() == 1) return *scenes[0];
  return *scenes[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(scenes.size())))];
}

int parse_single_label(const std::string& label) {
  try {
    std::size_t used = 0;
    int v = std::stoi(label, &used);
    if (used == label.size() && v >= 0) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Config, "bad single label '" + label + "'");
}

std::vector<int> parse_multi_label(const std::string& label) {
  std::vector<int> out;
  if (label.empty()) return out;
  for (const auto& part : split(label, ';')) out.push_back(parse_single_label(trim(part)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string format_multi_label(const std::vector<int>& classes) {
  std::string s;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(classes[i]);
  }
  return s;
}

}  // namespace fgmae
