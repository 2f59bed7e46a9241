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

#include "fgmae/app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "fgmae/core/digest.hpp"
#include "fgmae/core/error.hpp"

namespace fgmae {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

// Reads keys from one JSON object; finish() rejects whatever was not read.
class Section {
 public:
  Section(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ != nullptr && !j_->is_object()) fail(ErrorKind::Config, path_ + " must be an object");
  }

  bool has(const char* key) const { return j_ != nullptr && j_->contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(has(key) ? &j_->at(key) : nullptr, path_ + "." + key);
  }

  void get(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) bad(key, "an integer");
      const auto x = v->get<std::int64_t>();
      if (x < INT32_MIN || x > INT32_MAX) bad(key, "a 32-bit integer");
      out = static_cast<int>(x);
    }
  }
  void get(const char* key, std::int64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) bad(key, "an integer");
      out = v->get<std::int64_t>();
    }
  }
  void get(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) bad(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) bad(key, "a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) bad(key, "a boolean");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) bad(key, "a string");
      out = v->get<std::string>();
    }
  }
  template <typename T>
  void get(const char* key, std::vector<T>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) bad(key, "an array");
      out.clear();
      for (const auto& e : *v) {
        if constexpr (std::is_same_v<T, std::string>) {
          if (!e.is_string()) bad(key, "an array of strings");
        } else if constexpr (std::is_floating_point_v<T>) {
          if (!e.is_number()) bad(key, "an array of numbers");
        } else if constexpr (std::is_unsigned_v<T>) {
          if (!e.is_number_unsigned()) bad(key, "an array of non-negative integers");
        } else {
          if (!e.is_number_integer()) bad(key, "an array of integers");
        }
        out.push_back(e.get<T>());
      }
    }
  }

  void finish() const {
    if (j_ == nullptr) return;
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorKind::Config, "unknown key " + path_ + "." + it.key());
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    if (!has(key)) return nullptr;
    return &j_->at(key);
  }
  [[noreturn]] void bad(const char* key, const char* what) const {
    fail(ErrorKind::Config, path_ + "." + key + " must be " + what);
  }

  const json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

Dtype parse_dtype(const std::string& s) {
  if (s == "f32") return Dtype::F32;
  if (s == "f64") return Dtype::F64;
  fail(ErrorKind::Config, "unknown dtype '" + s + "' (expected f32 or f64)");
}

void read_model(Section s, ModelConfig& m) {
  if (s.has("preset")) {
    std::string name;
    s.get("preset", name);
    const ModelConfig p = ModelConfig::preset(name);
    m.enc_dim = p.enc_dim;
    m.enc_depth = p.enc_depth;
    m.enc_heads = p.enc_heads;
  }
  s.get("image_size", m.image_size);
  s.get("patch", m.patch);
  s.get("in_channels", m.in_channels);
  s.get("enc_dim", m.enc_dim);
  s.get("enc_depth", m.enc_depth);
  s.get("enc_heads", m.enc_heads);
  s.get("dec_dim", m.dec_dim);
  s.get("dec_depth", m.dec_depth);
  s.get("dec_heads", m.dec_heads);
  s.get("mlp_ratio", m.mlp_ratio);
  s.get("mask_ratio", m.mask_ratio);
  s.get("head_weights", m.head_weights);
  s.get("zero_init_heads", m.zero_init_heads);
  std::string dtype = dtype_name(m.dtype);
  s.get("dtype", dtype);
  m.dtype = parse_dtype(dtype);
  s.finish();
}

void read_feature(Section s, FeatureSpec& f) {
  std::string kind = feature_name(f.kind);
  s.get("kind", kind);
  f.kind = parse_feature(kind);
  Section hog = s.child("hog");
  hog.get("bins", f.hog.n_bins);
  hog.get("cell", f.hog.cell_size);
  hog.get("eps", f.hog.eps);
  hog.finish();
  Section canny = s.child("canny");
  canny.get("sigma", f.canny.sigma);
  canny.get("kernel", f.canny.kernel);
  canny.get("low", f.canny.low);
  canny.get("high", f.canny.high);
  canny.finish();
  Section sift = s.child("sift");
  sift.get("stride", f.sift.stride);
  sift.get("support", f.sift.support);
  sift.get("spatial_bins", f.sift.spatial_bins);
  sift.get("orientation_bins", f.sift.orientation_bins);
  sift.get("clip", f.sift.clip);
  sift.finish();
  Section bands = s.child("bands");
  bands.get("nir", f.bands.nir);
  bands.get("red", f.bands.red);
  bands.get("green", f.bands.green);
  bands.get("swir", f.bands.swir);
  bands.finish();
  s.finish();
}

void read_probe(Section s, ProbeConfig& p) {
  std::string task = task_name(p.task);
  s.get("task", task);
  p.task = parse_task(task);
  s.get("num_classes", p.num_classes);
  s.get("epochs", p.epochs);
  s.get("batch", p.batch);
  s.get("lr", p.lr);
  s.get("momentum", p.momentum);
  s.get("weight_decay", p.weight_decay);
  s.get("layer_decay", p.layer_decay);
  s.get("mixup_alpha", p.mixup_alpha);
  s.get("clip_norm", p.clip_norm);
  s.get("label_smoothing", p.label_smoothing);
  s.get("warmup_epochs", p.warmup_epochs);
  s.get("train_fraction", p.train_fraction);
  s.finish();
}

ordered model_json(const ModelConfig& m) {
  return ordered{{"image_size", m.image_size}, {"patch", m.patch}, {"in_channels", m.in_channels},
                 {"enc_dim", m.enc_dim}, {"enc_depth", m.enc_depth}, {"enc_heads", m.enc_heads},
                 {"dec_dim", m.dec_dim}, {"dec_depth", m.dec_depth}, {"dec_heads", m.dec_heads},
                 {"mlp_ratio", m.mlp_ratio}, {"mask_ratio", m.mask_ratio}, {"head_weights", m.head_weights},
                 {"zero_init_heads", m.zero_init_heads}, {"dtype", dtype_name(m.dtype)}};
}

ordered feature_json(const FeatureSpec& f) {
  return ordered{
      {"kind", feature_name(f.kind)},
      {"hog", ordered{{"bins", f.hog.n_bins}, {"cell", f.hog.cell_size}, {"eps", f.hog.eps}}},
      {"canny", ordered{{"sigma", f.canny.sigma}, {"kernel", f.canny.kernel}, {"low", f.canny.low}, {"high", f.canny.high}}},
      {"sift", ordered{{"stride", f.sift.stride}, {"support", f.sift.support}, {"spatial_bins", f.sift.spatial_bins},
                       {"orientation_bins", f.sift.orientation_bins}, {"clip", f.sift.clip}}},
      {"bands", ordered{{"nir", f.bands.nir}, {"red", f.bands.red}, {"green", f.bands.green}, {"swir", f.bands.swir}}}};
}

ordered probe_json(const ProbeConfig& p) {
  return ordered{{"task", task_name(p.task)}, {"num_classes", p.num_classes}, {"epochs", p.epochs},
                 {"batch", p.batch}, {"lr", p.lr}, {"momentum", p.momentum}, {"weight_decay", p.weight_decay},
                 {"layer_decay", p.layer_decay}, {"mixup_alpha", p.mixup_alpha}, {"clip_norm", p.clip_norm},
                 {"label_smoothing", p.label_smoothing}, {"warmup_epochs", p.warmup_epochs},
                 {"train_fraction", p.train_fraction}};
}

}  // namespace

void RunConfig::finalize() {
  pretrain.seed = seed;
  pretrain.deterministic = deterministic;
  probe.seed = seed;
  finetune.seed = seed;
  pretrain.finalize();
}

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  seed_given = true;
  if (!synth_seed_given) synth.seed = s;
  finalize();
}

void RunConfig::validate() const {
  pretrain.validate();
  probe.validate();
  finetune.validate();
  require(synth.locations >= 1 && synth.size >= 8 && synth.looks >= 1 && synth.structures >= 1, ErrorKind::Config,
          "synth section needs locations >= 1, size >= 8, looks >= 1, structures >= 1");
  require(ablation.features.size() >= 2 && !ablation.seeds.empty(), ErrorKind::Config,
          "ablation needs at least two features and one seed");
  for (const auto& f : ablation.features) {
    FeatureSpec spec = pretrain.feature;
    spec.kind = parse_feature(f);
    spec.validate(pretrain.model.in_channels, pretrain.model.patch);
  }
}

std::filesystem::path RunConfig::manifest_path() const {
  require(!manifest.empty(), ErrorKind::Config, "config has no data.manifest");
  const std::filesystem::path p(manifest);
  return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path RunConfig::probe_manifest_path() const {
  if (probe_manifest.empty()) return manifest_path();
  const std::filesystem::path p(probe_manifest);
  return p.is_absolute() ? p : base_dir / p;
}

AblationConfig RunConfig::ablation_config() const {
  AblationConfig a;
  a.pretrain = pretrain;
  a.probe = probe;
  for (const auto& f : ablation.features) {
    FeatureSpec spec = pretrain.feature;
    spec.kind = parse_feature(f);
    a.specs.push_back(spec);
  }
  a.seeds = ablation.seeds;
  a.random_init = ablation.random_init;
  return a;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  Section root(&doc, "config");
  cfg.seed_given = root.has("seed");
  root.get("seed", cfg.seed);
  root.get("deterministic", cfg.deterministic);
  read_model(root.child("model"), cfg.pretrain.model);
  read_feature(root.child("feature"), cfg.pretrain.feature);

  Section aug = root.child("augment");
  aug.get("enabled", cfg.pretrain.augment_enabled);
  aug.get("scale_min", cfg.pretrain.augment.scale_min);
  aug.get("scale_max", cfg.pretrain.augment.scale_max);
  aug.get("ratio_min", cfg.pretrain.augment.ratio_min);
  aug.get("ratio_max", cfg.pretrain.augment.ratio_max);
  aug.get("flip_prob", cfg.pretrain.augment.flip_prob);
  aug.finish();

  Section pre = root.child("pretrain");
  pre.get("epochs", cfg.pretrain.epochs);
  pre.get("batch", cfg.pretrain.batch);
  pre.get("base_lr", cfg.pretrain.base_lr);
  pre.get("min_lr", cfg.pretrain.min_lr);
  pre.get("warmup_epochs", cfg.pretrain.warmup_epochs);
  pre.get("weight_decay", cfg.pretrain.weight_decay);
  pre.get("clip_norm", cfg.pretrain.clip_norm);
  pre.get("checkpoint_every", cfg.pretrain.checkpoint_every);
  pre.finish();

  Section data = root.child("data");
  data.get("manifest", cfg.manifest);
  data.get("probe_manifest", cfg.probe_manifest);
  data.finish();

  Section synth = root.child("synth");
  std::string modality = modality_name(cfg.synth.modality);
  synth.get("modality", modality);
  cfg.synth.modality = parse_modality(modality);
  synth.get("locations", cfg.synth.locations);
  synth.get("size", cfg.synth.size);
  synth.get("looks", cfg.synth.looks);
  synth.get("structures", cfg.synth.structures);
  cfg.synth.seed = cfg.seed;
  cfg.synth_seed_given = synth.has("seed");
  synth.get("seed", cfg.synth.seed);
  synth.finish();

  read_probe(root.child("probe"), cfg.probe);
  read_probe(root.child("finetune"), cfg.finetune);

  Section abl = root.child("ablation");
  abl.get("features", cfg.ablation.features);
  abl.get("seeds", cfg.ablation.seeds);
  abl.get("random_init", cfg.ablation.random_init);
  abl.finish();
  root.finish();

  cfg.finalize();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string run_config_json(const RunConfig& c) {
  const auto& a = c.pretrain.augment;
  const auto& p = c.pretrain;
  ordered j{
      {"seed", c.seed},
      {"deterministic", c.deterministic},
      {"model", model_json(p.model)},
      {"feature", feature_json(p.feature)},
      {"augment", ordered{{"enabled", p.augment_enabled}, {"scale_min", a.scale_min}, {"scale_max", a.scale_max},
                          {"ratio_min", a.ratio_min}, {"ratio_max", a.ratio_max}, {"flip_prob", a.flip_prob}}},
      {"pretrain", ordered{{"epochs", p.epochs}, {"batch", p.batch}, {"base_lr", p.base_lr}, {"min_lr", p.min_lr},
                           {"warmup_epochs", p.warmup_epochs}, {"weight_decay", p.weight_decay},
                           {"clip_norm", p.clip_norm}, {"checkpoint_every", p.checkpoint_every}}},
      {"data", ordered{{"manifest", c.manifest}, {"probe_manifest", c.probe_manifest}}},
      {"synth", ordered{{"modality", modality_name(c.synth.modality)}, {"locations", c.synth.locations},
                        {"size", c.synth.size}, {"looks", c.synth.looks}, {"structures", c.synth.structures},
                        {"seed", c.synth.seed}}},
      {"probe", probe_json(c.probe)},
      {"finetune", probe_json(c.finetune)},
      {"ablation", ordered{{"features", c.ablation.features}, {"seeds", c.ablation.seeds},
                           {"random_init", c.ablation.random_init}}},
  };
  return j.dump();
}

std::string config_digest(const RunConfig& cfg) { return digest_hex(run_config_json(cfg)); }

}  // namespace fgmae
