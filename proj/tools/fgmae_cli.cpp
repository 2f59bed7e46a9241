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

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fgmae/fgmae.h"

namespace {

// One line, prefix-tagged, so scripts can split on the first colon.
int report(fgmae_status s) {
  if (s == FGMAE_OK) return 0;
  std::string msg = fgmae_last_error();
  for (char& c : msg) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::fprintf(stderr, "error[%s]: %s\n", fgmae_status_tag(s), msg.c_str());
  return static_cast<int>(s);
}

int usage_error(const std::string& msg) {
  std::fprintf(stderr, "error[config]: %s\n", msg.c_str());
  return FGMAE_ERR_CONFIG;
}

bool g_verbose = false;

void log_sink(fgmae_log_level level, const char* message, void*) {
  if (level == FGMAE_LOG_DEBUG && !g_verbose) return;
  static const char* names[] = {"debug", "info", "warn", "error"};
  std::fprintf(stderr, "[%s] %s\n", names[level], message);
}

// --seed beats the config file, which beats FGMAE_SEED.
std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("FGMAE_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v, &end, 10);
  if (*end != '\0') return std::nullopt;
  return static_cast<std::uint64_t>(x);
}

struct ConfigHandle {
  fgmae_config* cfg = nullptr;
  ~ConfigHandle() { fgmae_config_free(cfg); }
};

struct TensorHandle {
  fgmae_tensor* t = nullptr;
  ~TensorHandle() { fgmae_tensor_free(t); }
};

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_config_args(CLI::App* cmd, ConfigArgs& a, bool required = true) {
  auto* opt = cmd->add_option("--config", a.path, "Run config (JSON)")->check(CLI::ExistingFile);
  if (required) opt->required();
  cmd->add_option("--set", a.overrides, "Override a config field, KEY=JSON (repeatable)")
      ->check(CLI::Validator(
          [](std::string& v) {
            const auto eq = v.find('=');
            return eq == std::string::npos || eq == 0 ? std::string("expected KEY=JSON, got '") + v + "'"
                                                      : std::string();
          },
          "KEY=JSON"));
  cmd->add_option("--seed", a.seed, "Run seed (beats the config file and FGMAE_SEED)");
}

fgmae_status open_config(const ConfigArgs& a, bool deterministic, ConfigHandle& h) {
  fgmae_status s = a.path.empty() ? fgmae_config_parse("{}", nullptr, &h.cfg) : fgmae_config_load(a.path.c_str(), &h.cfg);
  if (s != FGMAE_OK) return s;
  std::vector<std::string> keys, values;
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    keys.push_back(kv.substr(0, eq));
    values.push_back(kv.substr(eq + 1));
  }
  if (deterministic) keys.emplace_back("deterministic"), values.emplace_back("true");
  std::vector<const char*> kp, vp;
  for (std::size_t i = 0; i < keys.size(); ++i) kp.push_back(keys[i].c_str()), vp.push_back(values[i].c_str());
  s = fgmae_config_override_many(h.cfg, kp.data(), vp.data(), kp.size());
  if (s != FGMAE_OK) return s;
  if (a.seed) {
    s = fgmae_config_set_seed(h.cfg, *a.seed);
  } else if (!fgmae_config_has_seed(h.cfg)) {
    if (auto e = env_seed()) s = fgmae_config_set_seed(h.cfg, *e);
  }
  if (s != FGMAE_OK) return s;
  char digest[32];
  s = fgmae_config_digest(h.cfg, digest, sizeof(digest));
  if (s == FGMAE_OK) std::printf("digest %s\n", digest);
  return s;
}

std::string dims_of(const fgmae_tensor* t) {
  std::string out = "(";
  for (int i = 0; i < fgmae_tensor_rank(t); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(fgmae_tensor_dim(t, i));
  }
  return out + ")";
}

void print_metric(const char* name, double v) {
  if (!std::isnan(v)) std::printf("%s %.6f\n", name, v);
}

void print_metrics(const fgmae_metrics& m) {
  print_metric("oa", m.oa);
  print_metric("aa", m.aa);
  print_metric("map", m.map);
  print_metric("f1", m.f1);
  print_metric("miou", m.miou);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fgmae: feature-guided masked autoencoder pipeline"};
  app.require_subcommand(1);
  bool deterministic = false;
  app.add_flag("--deterministic", deterministic, "Force deterministic mode (single-threaded, counter-based RNG)");
  app.add_flag("-v,--verbose", g_verbose, "Print debug logging");
  app.set_version_flag("--version", fgmae_version());

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic MS or SAR dataset");
  fgmae_synth_options so;
  fgmae_synth_defaults(&so);
  std::string modality, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--modality", modality, "MS or SAR")->required()->check(CLI::IsMember({"MS", "SAR"}));
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", so.locations, "Number of locations")->required()->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Dataset seed");
  synth->add_option("--looks", so.looks, "SAR speckle looks")->check(CLI::PositiveNumber);
  synth->add_option("--size", so.size, "Scene side in pixels")->check(CLI::Range(8, 4096));
  synth->add_option("--structures", so.structures, "Regions per scene")->check(CLI::PositiveNumber);

  // extract
  auto* extract = app.add_subcommand("extract", "Compute a descriptor from an FGMR image");
  std::string feature, extract_in, extract_out, band_map;
  ConfigArgs extract_cfg;
  extract->add_option("--feature", feature, "hog, ndi, canny, sift or raw")->required();
  extract->add_option("--in", extract_in, "Input FGMR image")->required();
  extract->add_option("--out", extract_out, "Output FGMR tensor")->required();
  extract->add_option("--band-map", band_map, "NDI bands as NIR,RED,GREEN,SWIR channel indices");
  add_config_args(extract, extract_cfg, false);

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain on data.manifest");
  ConfigArgs pre_cfg;
  std::string pre_out, resume;
  add_config_args(pretrain, pre_cfg);
  pretrain->add_option("--out", pre_out, "Output directory")->required();
  pretrain->add_option("--resume", resume, "Checkpoint directory to resume from")->check(CLI::ExistingDirectory);

  // probe / finetune
  auto* probe = app.add_subcommand("probe", "Linear probe (or per-patch segmentation probe) on a frozen encoder");
  ConfigArgs probe_cfg;
  std::string probe_ckpt, probe_out;
  bool segmentation = false;
  add_config_args(probe, probe_cfg);
  probe->add_option("--checkpoint", probe_ckpt, "Checkpoint directory; omitted means random init")
      ->check(CLI::ExistingDirectory);
  probe->add_option("--out", probe_out, "Output directory")->required();
  probe->add_flag("--segmentation", segmentation, "Score location masks with a per-patch classifier");

  auto* finetune = app.add_subcommand("finetune", "Fine-tune the encoder with a linear head");
  ConfigArgs ft_cfg;
  std::string ft_ckpt, ft_out;
  add_config_args(finetune, ft_cfg);
  finetune->add_option("--checkpoint", ft_ckpt, "Checkpoint directory")->check(CLI::ExistingDirectory);
  finetune->add_option("--out", ft_out, "Output directory")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Pretrain and probe every (feature, seed) pair");
  ConfigArgs abl_cfg;
  std::string abl_out;
  add_config_args(ablate, abl_cfg);
  ablate->add_option("--out", abl_out, "Output directory")->required();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Score masks (OA, AA, mIoU) or multi-label scores (mAP, F1)");
  std::string pred_path, label_path, scores_path;
  int n_classes = 0, ignore_index = -1;
  metrics->add_option("--pred", pred_path, "Predicted class mask (FGMR)");
  metrics->add_option("--scores", scores_path, "N x K score matrix (FGMR)");
  metrics->add_option("--label", label_path, "Label mask or N x K 0/1 matrix (FGMR)")->required();
  metrics->add_option("--classes", n_classes, "Number of classes (masks)");
  metrics->add_option("--ignore", ignore_index, "Label value excluded from mask metrics");

  // render
  auto* render = app.add_subcommand("render", "Render an NDI, HOG or SAR tensor to a P6 PPM");
  std::string render_in, render_kind, render_out;
  int cell = 8;
  render->add_option("--in", render_in, "Input FGMR tensor")->required();
  render->add_option("--kind", render_kind, "ndi, hog or sar")->required();
  render->add_option("--out", render_out, "Output PPM")->required();
  render->add_option("--cell", cell, "HOG cell size in pixels")->check(CLI::PositiveNumber);

  // reconstruct
  auto* recon = app.add_subcommand("reconstruct", "Mask a scene and render the predicted targets");
  ConfigArgs recon_cfg;
  std::string recon_ckpt, scene, recon_out;
  add_config_args(recon, recon_cfg);
  recon->add_option("--checkpoint", recon_ckpt, "Checkpoint directory")->check(CLI::ExistingDirectory);
  recon->add_option("--scene", scene, "Scene FGMR")->required();
  recon->add_option("--out", recon_out, "Output PPM")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }
  fgmae_set_log_callback(log_sink, nullptr);

  if (*synth) {
    so.modality = modality.c_str();
    so.seed = synth_seed ? *synth_seed : env_seed().value_or(0);
    const fgmae_status s = fgmae_synth(synth_out.c_str(), &so);
    if (s == FGMAE_OK) std::printf("wrote %d scenes to %s\n", so.locations * 4, synth_out.c_str());
    return report(s);
  }

  if (*extract) {
    ConfigHandle cfg;
    if (!extract_cfg.path.empty() || !extract_cfg.overrides.empty()) {
      if (const fgmae_status s = open_config(extract_cfg, deterministic, cfg); s != FGMAE_OK) return report(s);
    }
    if (!band_map.empty()) {
      int b[4];
      if (std::sscanf(band_map.c_str(), "%d,%d,%d,%d", &b[0], &b[1], &b[2], &b[3]) != 4) {
        return usage_error("--band-map expects four comma-separated channel indices");
      }
      if (cfg.cfg == nullptr) {
        if (const fgmae_status s = fgmae_config_parse("{}", nullptr, &cfg.cfg); s != FGMAE_OK) return report(s);
      }
      const char* keys[] = {"feature.bands.nir", "feature.bands.red", "feature.bands.green", "feature.bands.swir"};
      for (int i = 0; i < 4; ++i) {
        const fgmae_status s = fgmae_config_override(cfg.cfg, keys[i], std::to_string(b[i]).c_str());
        if (s != FGMAE_OK) return report(s);
      }
    }
    TensorHandle in, out;
    fgmae_status s = fgmae_tensor_read(extract_in.c_str(), &in.t);
    if (s == FGMAE_OK) s = fgmae_extract(in.t, feature.c_str(), cfg.cfg, &out.t);
    if (s == FGMAE_OK) s = fgmae_tensor_write(out.t, extract_out.c_str());
    if (s == FGMAE_OK) std::printf("%s %s\n", feature.c_str(), dims_of(out.t).c_str());
    return report(s);
  }

  if (*pretrain) {
    ConfigHandle cfg;
    fgmae_status s = open_config(pre_cfg, deterministic, cfg);
    fgmae_pretrain_summary sum{};
    if (s == FGMAE_OK) s = fgmae_pretrain(cfg.cfg, pre_out.c_str(), resume.empty() ? nullptr : resume.c_str(), &sum);
    if (s == FGMAE_OK) {
      std::printf("steps %lld\ninitial loss %.17g\nfinal loss %.17g\n", static_cast<long long>(sum.steps),
                  sum.initial_loss, sum.final_loss);
    }
    return report(s);
  }

  if (*probe || *finetune) {
    const bool ft = finetune->parsed();
    ConfigHandle cfg;
    fgmae_status s = open_config(ft ? ft_cfg : probe_cfg, deterministic, cfg);
    const std::string& ckpt = ft ? ft_ckpt : probe_ckpt;
    const char* mode = ft ? "finetune" : segmentation ? "segmentation" : "linear";
    fgmae_metrics m{};
    if (s == FGMAE_OK) {
      s = fgmae_evaluate(cfg.cfg, ckpt.empty() ? nullptr : ckpt.c_str(), mode, (ft ? ft_out : probe_out).c_str(), &m);
    }
    if (s == FGMAE_OK) print_metrics(m);
    return report(s);
  }

  if (*ablate) {
    ConfigHandle cfg;
    fgmae_status s = open_config(abl_cfg, deterministic, cfg);
    if (s == FGMAE_OK) s = fgmae_ablate(cfg.cfg, abl_out.c_str());
    if (s == FGMAE_OK) std::printf("wrote %s/ablation.csv\n", abl_out.c_str());
    return report(s);
  }

  if (*metrics) {
    if (pred_path.empty() == scores_path.empty()) return usage_error("metrics needs exactly one of --pred or --scores");
    TensorHandle a, b;
    fgmae_status s = fgmae_tensor_read((pred_path.empty() ? scores_path : pred_path).c_str(), &a.t);
    if (s == FGMAE_OK) s = fgmae_tensor_read(label_path.c_str(), &b.t);
    fgmae_metrics m{};
    if (s == FGMAE_OK) {
      if (!pred_path.empty()) {
        if (n_classes < 1) return usage_error("--classes is required with --pred");
        s = fgmae_metrics_masks(a.t, b.t, n_classes, ignore_index, &m);
      } else {
        s = fgmae_metrics_multilabel(a.t, b.t, &m);
      }
    }
    if (s == FGMAE_OK) print_metrics(m);
    return report(s);
  }

  if (*render) {
    TensorHandle in;
    fgmae_status s = fgmae_tensor_read(render_in.c_str(), &in.t);
    if (s == FGMAE_OK) s = fgmae_render(in.t, render_kind.c_str(), cell, ("fgmae render " + render_kind).c_str(), render_out.c_str());
    if (s == FGMAE_OK) std::printf("wrote %s\n", render_out.c_str());
    return report(s);
  }

  if (*recon) {
    ConfigHandle cfg;
    fgmae_status s = open_config(recon_cfg, deterministic, cfg);
    if (s == FGMAE_OK) s = fgmae_reconstruct(cfg.cfg, recon_ckpt.empty() ? nullptr : recon_ckpt.c_str(), scene.c_str(), recon_out.c_str());
    if (s == FGMAE_OK) std::printf("wrote %s\n", recon_out.c_str());
    return report(s);
  }
  return usage_error("no subcommand");
}
