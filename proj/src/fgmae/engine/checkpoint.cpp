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

#include "fgmae/engine/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "fgmae/core/error.hpp"
#include "fgmae/data/fgmr.hpp"
#include "json.hpp"

namespace fgmae {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kCheckpointVersion = 1;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os << text;
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

void save_checkpoint(const fs::path& dir, const CheckpointState& state) {
  require(state.moment_m.size() == state.moment_v.size(), ErrorKind::Internal, "moment lists differ in length");
  const fs::path tmp = dir.string() + ".tmp";
  const fs::path old = dir.string() + ".old";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp / "params", ec);
  if (!ec) fs::create_directories(tmp / "optim", ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + tmp.string() + ": " + ec.message());

  json index;
  index["format"] = "fgmae-checkpoint";
  index["version"] = kCheckpointVersion;
  index["step"] = state.step;
  index["optimizer_steps"] = state.optimizer_steps;
  index["config_digest"] = state.config_digest;
  index["config"] = state.config_json.empty() ? json::object() : json::parse(state.config_json);
  json params = json::array();
  for (const auto& p : state.params) {
    const std::string file = "params/" + p.name + ".fgmr";
    write_tensor(tmp / file, p.value);
    params.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"file", file}});
  }
  index["params"] = params;
  json moments = json::array();
  for (std::size_t i = 0; i < state.moment_m.size(); ++i) {
    const std::string& name = state.moment_m[i].name;
    const std::string m = "optim/" + name + ".m.fgmr", v = "optim/" + name + ".v.fgmr";
    write_tensor(tmp / m, state.moment_m[i].value);
    write_tensor(tmp / v, state.moment_v[i].value);
    moments.push_back({{"name", name}, {"m", m}, {"v", v}});
  }
  index["moments"] = moments;
  json history = json::array();
  for (const auto& e : state.history) history.push_back({e.step, e.lr, e.loss});
  index["loss_history"] = history;
  write_text(tmp / "index.json", index.dump(1) + "\n");

  fs::remove_all(old, ec);
  if (fs::exists(dir)) {
    fs::rename(dir, old, ec);
    if (ec) fail(ErrorKind::Io, "cannot move aside " + dir.string() + ": " + ec.message());
  }
  fs::rename(tmp, dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot publish checkpoint " + dir.string() + ": " + ec.message());
  fs::remove_all(old, ec);
}

CheckpointState load_checkpoint(const fs::path& dir) {
  std::ifstream is(dir / "index.json");
  if (!is) fail(ErrorKind::Io, "missing checkpoint index " + (dir / "index.json").string());
  json index;
  try {
    index = json::parse(is);
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, "malformed checkpoint index: " + std::string(e.what()));
  }
  require(index.value("format", "") == "fgmae-checkpoint", ErrorKind::Io, "not an fgmae checkpoint: " + dir.string());
  require(index.value("version", 0) == kCheckpointVersion, ErrorKind::Io, "unsupported checkpoint version");

  auto load = [&](const std::string& file) {
    const fs::path p = dir / file;
    if (!fs::exists(p)) fail(ErrorKind::Io, "checkpoint tensor missing: " + p.string());
    return read_tensor(p);
  };
  CheckpointState s;
  try {
    s.step = index.at("step").get<std::int64_t>();
    s.optimizer_steps = index.at("optimizer_steps").get<std::int64_t>();
    s.config_digest = index.at("config_digest").get<std::string>();
    s.config_json = index.at("config").dump();
    for (const auto& p : index.at("params")) {
      NamedTensor t{p.at("name").get<std::string>(), load(p.at("file").get<std::string>())};
      require(t.value.shape() == p.at("shape").get<Shape>(), ErrorKind::Shape,
              "checkpoint tensor " + t.name + " disagrees with its index entry");
      s.params.push_back(std::move(t));
    }
    for (const auto& m : index.at("moments")) {
      const std::string name = m.at("name").get<std::string>();
      s.moment_m.push_back({name, load(m.at("m").get<std::string>())});
      s.moment_v.push_back({name, load(m.at("v").get<std::string>())});
    }
    for (const auto& e : index.at("loss_history")) {
      s.history.push_back({e.at(0).get<std::int64_t>(), e.at(1).get<double>(), e.at(2).get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, "malformed checkpoint index: " + std::string(e.what()));
  }
  return s;
}

}  // namespace fgmae
