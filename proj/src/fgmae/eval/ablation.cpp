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

#include "fgmae/eval/ablation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fgmae/core/error.hpp"

namespace fgmae {

void AblationConfig::validate() const {
  require(specs.size() >= 2, ErrorKind::Config, "an ablation needs at least two feature specs");
  require(!seeds.empty(), ErrorKind::Config, "an ablation needs at least one seed");
  probe.validate();
}

std::vector<std::string> spec_labels(const std::vector<FeatureSpec>& specs) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    std::string name = feature_name(specs[i].kind);
    int seen = 0;
    for (std::size_t j = 0; j < i; ++j) seen += specs[j].kind == specs[i].kind;
    if (seen > 0) name += "#" + std::to_string(seen);
    out.push_back(name);
  }
  return out;
}

double AblationTable::mean(const std::string& spec) const {
  for (const auto& r : summary) {
    if (r.spec == spec) return r.value;
  }
  fail(ErrorKind::InvalidArgument, "no summary row for " + spec);
}

double AblationTable::value(const std::string& spec, std::uint64_t seed) const {
  for (const auto& r : rows) {
    if (r.spec == spec && r.seed == std::to_string(seed)) return r.value;
  }
  fail(ErrorKind::InvalidArgument, "no row for " + spec + " seed " + std::to_string(seed));
}

AblationTable feature_ablation_study(const AblationConfig& cfg, const SceneManifest& pretrain_data,
                                     const SceneManifest& probe_data, const AblationProgress& progress) {
  cfg.validate();
  const auto labels = spec_labels(cfg.specs);
  AblationTable table;
  auto record = [&](const std::string& spec, std::uint64_t seed, const MetricsReport& r) {
    table.rows.push_back({spec, std::to_string(seed), r.primary_name(), r.primary()});
    if (progress) progress(table.rows.back());
  };
  for (std::uint64_t seed : cfg.seeds) {
    ProbeConfig probe = cfg.probe;
    probe.seed = seed;
    for (std::size_t i = 0; i < cfg.specs.size(); ++i) {
      PretrainConfig pc = cfg.pretrain;
      pc.feature = cfg.specs[i];
      pc.seed = seed;
      Pretrainer trainer(pc, pretrain_data);
      trainer.run_until(trainer.total_steps());
      record(labels[i], seed, linear_probe_train(trainer.model(), probe_data, probe).report);
    }
    if (cfg.random_init) {
      PretrainConfig pc = cfg.pretrain;
      pc.seed = seed;
      pc.finalize();
      const FgMaeModel fresh(pc.model, Rng(seed).split("init"));
      record(kRandomInitArm, seed, linear_probe_train(fresh, probe_data, probe).report);
    }
  }
  std::vector<std::string> arms = labels;
  if (cfg.random_init) arms.push_back(kRandomInitArm);
  for (const auto& arm : arms) {
    double sum = 0.0;
    int n = 0;
    std::string metric;
    for (const auto& r : table.rows) {
      if (r.spec != arm) continue;
      sum += r.value;
      metric = r.metric;
      ++n;
    }
    table.summary.push_back({arm, "mean", metric, n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN()});
  }
  return table;
}

void write_ablation_csv(const std::filesystem::path& path, const AblationTable& table, const std::string& digest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  if (!digest.empty()) os << "# digest=" << digest << "\n";
  os << "spec,seed,metric,value\n";
  char buf[64];
  for (const auto* part : {&table.rows, &table.summary}) {
    for (const auto& r : *part) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.value);
      os << r.spec << "," << r.seed << "," << r.metric << "," << buf << "\n";
    }
  }
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace fgmae
