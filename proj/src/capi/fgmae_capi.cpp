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

#include "fgmae/fgmae.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "fgmae/app/config.hpp"
#include "fgmae/core/error.hpp"
#include "fgmae/core/log.hpp"
#include "fgmae/data/augment.hpp"
#include "fgmae/data/fgmr.hpp"
#include "fgmae/data/ppm.hpp"
#include "fgmae/data/synth.hpp"
#include "fgmae/engine/checkpoint.hpp"
#include "fgmae/engine/pretrain.hpp"
#include "fgmae/eval/ablation.hpp"
#include "fgmae/eval/metrics.hpp"
#include "fgmae/eval/transfer.hpp"
#include "fgmae/features/features.hpp"
#include "fgmae/model/masking.hpp"
#include "fgmae/model/patchify.hpp"
#include "fgmae/model/render.hpp"

struct fgmae_config {
  nlohmann::json doc;
  std::filesystem::path base_dir;
  std::optional<std::uint64_t> seed_override;
  fgmae::RunConfig cfg;
};

struct fgmae_tensor {
  fgmae::Tensor value;
};

namespace {

using namespace fgmae;

thread_local std::string g_last_error;

fgmae_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::InvalidArgument:
      return FGMAE_ERR_CONFIG;
    case ErrorKind::Io:
      return FGMAE_ERR_IO;
    case ErrorKind::Geometry:
    case ErrorKind::Shape:
      return FGMAE_ERR_GEOMETRY;
    case ErrorKind::NonFinite:
      return FGMAE_ERR_NONFINITE;
    case ErrorKind::Internal:
      break;
  }
  return FGMAE_ERR_INTERNAL;
}

// Runs fn, translating exceptions into a status and the thread's last error.
template <typename Fn>
fgmae_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FGMAE_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return FGMAE_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FGMAE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FGMAE_ERR_INTERNAL;
  }
}

void require_arg(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
}

void rebuild(fgmae_config& c) {
  c.cfg = parse_run_config(c.doc.dump(), c.base_dir);
  if (c.seed_override) c.cfg.set_seed(*c.seed_override);
}

fgmae_tensor* wrap(Tensor t) { return new fgmae_tensor{std::move(t)}; }

std::string digest_of(const fgmae_config* cfg) { return config_digest(cfg->cfg); }

void fill_metrics(const MetricsReport& r, fgmae_metrics* out) {
  if (out == nullptr) return;
  out->oa = r.oa;
  out->aa = r.aa;
  out->map = r.map;
  out->f1 = r.f1;
  out->miou = r.miou;
  out->train_samples = r.train_samples;
  out->test_samples = r.test_samples;
}

void clear_metrics(fgmae_metrics* out) {
  if (out == nullptr) return;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  *out = {nan, nan, nan, nan, nan, 0, 0};
}

std::filesystem::path make_dir(const char* dir) {
  require_arg(dir, "output directory");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, std::string("cannot create ") + dir + ": " + ec.message());
  return dir;
}

FgMaeModel load_model(const RunConfig& cfg, const char* checkpoint_dir) {
  if (checkpoint_dir == nullptr) return FgMaeModel(cfg.pretrain.model, Rng(cfg.seed).split("init"));
  const CheckpointState state = load_checkpoint(checkpoint_dir);
  if (state.config_digest != config_digest(cfg)) {
    log::info("checkpoint digest " + state.config_digest + " differs from the evaluation config " + config_digest(cfg));
  }
  return model_from_checkpoint(cfg.pretrain.model, state);
}

std::vector<int> class_ids(const Tensor& t) {
  std::vector<int> out;
  for (double v : t.to_vector()) {
    require(v == std::floor(v), ErrorKind::InvalidArgument, "mask entries must be integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

extern "C" {

const char* fgmae_last_error(void) { return g_last_error.c_str(); }

const char* fgmae_status_tag(fgmae_status status) {
  switch (status) {
    case FGMAE_OK:
      return "ok";
    case FGMAE_ERR_CONFIG:
      return "config";
    case FGMAE_ERR_IO:
      return "io";
    case FGMAE_ERR_GEOMETRY:
      return "geometry";
    case FGMAE_ERR_NONFINITE:
      return "nonfinite";
    case FGMAE_ERR_INTERNAL:
      break;
  }
  return "internal";
}

const char* fgmae_version(void) { return "0.1.0"; }

void fgmae_set_log_callback(fgmae_log_fn fn, void* user) {
  if (fn == nullptr) {
    log::set_sink({});
    return;
  }
  log::set_sink([fn, user](log::Level level, const std::string& msg) {
    fn(static_cast<fgmae_log_level>(level), msg.c_str(), user);
  });
}

fgmae_status fgmae_config_parse(const char* json, const char* base_dir, fgmae_config** out) {
  return guarded([&] {
    require_arg(json, "json");
    require_arg(out, "out");
    *out = nullptr;
    auto c = std::make_unique<fgmae_config>();
    try {
      c->doc = nlohmann::json::parse(json);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
    }
    c->base_dir = base_dir != nullptr ? base_dir : "";
    rebuild(*c);
    *out = c.release();
  });
}

fgmae_status fgmae_config_load(const char* path, fgmae_config** out) {
  return guarded([&] {
    require_arg(path, "path");
    std::ifstream is(path);
    if (!is) fail(ErrorKind::Io, std::string("cannot read config ") + path);
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string dir = std::filesystem::path(path).parent_path().string();
    const fgmae_status s = fgmae_config_parse(ss.str().c_str(), dir.c_str(), out);
    if (s != FGMAE_OK) throw Error(s == FGMAE_ERR_IO ? ErrorKind::Io : ErrorKind::Config, g_last_error);
  });
}

void fgmae_config_free(fgmae_config* cfg) { delete cfg; }

int fgmae_config_has_seed(const fgmae_config* cfg) { return cfg != nullptr && cfg->cfg.seed_given ? 1 : 0; }

uint64_t fgmae_config_seed(const fgmae_config* cfg) { return cfg != nullptr ? cfg->cfg.seed : 0; }

fgmae_status fgmae_config_set_seed(fgmae_config* cfg, uint64_t seed) {
  return guarded([&] {
    require_arg(cfg, "config");
    cfg->seed_override = seed;
    cfg->cfg.set_seed(seed);
  });
}

fgmae_status fgmae_config_digest(const fgmae_config* cfg, char* buf, size_t len) {
  return guarded([&] {
    require_arg(cfg, "config");
    require_arg(buf, "buffer");
    const std::string d = digest_of(cfg);
    require(len > d.size(), ErrorKind::InvalidArgument, "digest buffer too small");
    std::memcpy(buf, d.c_str(), d.size() + 1);
  });
}

fgmae_status fgmae_config_override_many(fgmae_config* cfg, const char* const* keys, const char* const* json_values,
                                       size_t count) {
  return guarded([&] {
    require_arg(cfg, "config");
    require(count == 0 || (keys != nullptr && json_values != nullptr), ErrorKind::InvalidArgument,
            "keys and values must not be NULL");
    nlohmann::json doc = cfg->doc;
    std::vector<std::string> applied;
    for (size_t i = 0; i < count; ++i) {
      require_arg(keys[i], "key");
      require_arg(json_values[i], "value");
      nlohmann::json value;
      try {
        value = nlohmann::json::parse(json_values[i]);
      } catch (const nlohmann::json::parse_error&) {
        value = std::string(json_values[i]);
      }
      nlohmann::json* node = &doc;
      std::string path = keys[i];
      require(!path.empty(), ErrorKind::Config, "empty override key");
      for (std::size_t pos; (pos = path.find('.')) != std::string::npos; path.erase(0, pos + 1)) {
        const std::string part = path.substr(0, pos);
        if (!node->contains(part)) (*node)[part] = nlohmann::json::object();
        node = &(*node)[part];
        require(node->is_object(), ErrorKind::Config, std::string("cannot override inside non-object ") + keys[i]);
      }
      (*node)[path] = value;
      applied.push_back(std::string(keys[i]) + " = " + value.dump());
    }
    // Validation sees every override at once, so dependent fields can change together.
    fgmae_config next{doc, cfg->base_dir, cfg->seed_override, {}};
    rebuild(next);
    *cfg = std::move(next);
    for (const auto& a : applied) log::info("override " + a);
  });
}

fgmae_status fgmae_config_override(fgmae_config* cfg, const char* key, const char* json_value) {
  return fgmae_config_override_many(cfg, &key, &json_value, 1);
}

fgmae_status fgmae_tensor_create(const int64_t* dims, int rank, const double* values, fgmae_dtype dtype,
                                 fgmae_tensor** out) {
  return guarded([&] {
    require_arg(out, "out");
    require(rank >= 0 && (rank == 0 || dims != nullptr), ErrorKind::InvalidArgument, "bad dims");
    require(dtype == FGMAE_F32 || dtype == FGMAE_F64, ErrorKind::InvalidArgument, "unknown dtype");
    Shape shape(dims, dims + rank);
    for (auto d : shape) require(d > 0, ErrorKind::InvalidArgument, "dimensions must be positive");
    const auto n = static_cast<std::size_t>(shape_numel(shape));
    require(n == 0 || values != nullptr, ErrorKind::InvalidArgument, "values must not be NULL");
    *out = wrap(Tensor::from_values(shape, std::span<const double>(values, n), static_cast<Dtype>(dtype)));
  });
}

fgmae_status fgmae_tensor_read(const char* path, fgmae_tensor** out) {
  return guarded([&] {
    require_arg(path, "path");
    require_arg(out, "out");
    *out = wrap(read_tensor(path));
  });
}

fgmae_status fgmae_tensor_write(const fgmae_tensor* t, const char* path) {
  return guarded([&] {
    require_arg(t, "tensor");
    require_arg(path, "path");
    write_tensor(path, t->value);
  });
}

void fgmae_tensor_free(fgmae_tensor* t) { delete t; }

int fgmae_tensor_rank(const fgmae_tensor* t) { return t != nullptr ? t->value.rank() : -1; }

int64_t fgmae_tensor_dim(const fgmae_tensor* t, int axis) {
  if (t == nullptr || axis < 0 || axis >= t->value.rank()) return -1;
  return t->value.dim(axis);
}

int64_t fgmae_tensor_numel(const fgmae_tensor* t) { return t != nullptr ? t->value.numel() : -1; }

fgmae_dtype fgmae_tensor_dtype(const fgmae_tensor* t) {
  return t != nullptr && t->value.dtype() == Dtype::F64 ? FGMAE_F64 : FGMAE_F32;
}

fgmae_status fgmae_tensor_values(const fgmae_tensor* t, double* out, size_t count) {
  return guarded([&] {
    require_arg(t, "tensor");
    require_arg(out, "out");
    const auto v = t->value.to_vector();
    std::copy_n(v.begin(), std::min(count, v.size()), out);
  });
}

void fgmae_synth_defaults(fgmae_synth_options* opts) {
  if (opts == nullptr) return;
  const DatasetSpec d;
  opts->modality = "SAR";
  opts->locations = d.locations;
  opts->seed = d.seed;
  opts->looks = d.looks;
  opts->size = d.size;
  opts->structures = d.structures;
}

fgmae_status fgmae_synth(const char* out_dir, const fgmae_synth_options* opts) {
  return guarded([&] {
    require_arg(opts, "options");
    require_arg(opts->modality, "modality");
    DatasetSpec spec;
    spec.modality = parse_modality(opts->modality);
    spec.locations = opts->locations;
    spec.seed = opts->seed;
    spec.looks = opts->looks;
    spec.size = opts->size;
    spec.structures = opts->structures;
    require(spec.locations >= 1, ErrorKind::Config, "--n must be >= 1");
    require(spec.looks >= 1, ErrorKind::Config, "--looks must be >= 1");
    require(spec.size >= 8, ErrorKind::Config, "--size must be >= 8");
    write_synthetic_dataset(make_dir(out_dir), spec);
  });
}

fgmae_status fgmae_extract(const fgmae_tensor* image, const char* feature, const fgmae_config* cfg,
                           fgmae_tensor** out) {
  return guarded([&] {
    require_arg(image, "image");
    require_arg(feature, "feature");
    require_arg(out, "out");
    const Tensor& in = image->value;
    require(in.rank() == 3 || in.rank() == 4, ErrorKind::Geometry,
            "extract expects C x H x W or B x C x H x W, got " + shape_str(in.shape()));
    const bool single = in.rank() == 3;
    const Tensor batch = single ? in.reshape({1, in.dim(0), in.dim(1), in.dim(2)}) : in;
    const FeatureSpec spec = cfg != nullptr ? cfg->cfg.pretrain.feature : FeatureSpec{};
    Tensor result;
    switch (parse_feature(feature)) {
      case FeatureKind::Hog:
        result = compute_hog(batch, spec.hog);
        break;
      case FeatureKind::Ndi:
        result = compute_ndi(batch, spec.bands);
        break;
      case FeatureKind::CannyEdge:
        result = compute_canny(batch, spec.canny);
        break;
      case FeatureKind::DenseSift:
        result = compute_dense_sift(batch, spec.sift);
        break;
      case FeatureKind::RawPixels:
        result = batch;
        break;
      case FeatureKind::HogPlusNdi:
        fail(ErrorKind::Config, "hog+ndi is a target spec, extract hog and ndi separately");
    }
    if (single) {
      Shape s(result.shape().begin() + 1, result.shape().end());
      result = result.reshape(s);
    }
    *out = wrap(std::move(result));
  });
}

fgmae_status fgmae_pretrain(const fgmae_config* cfg, const char* out_dir, const char* resume_dir,
                            fgmae_pretrain_summary* summary) {
  return guarded([&] {
    require_arg(cfg, "config");
    const auto out = make_dir(out_dir);
    const SceneManifest manifest = SceneManifest::load(cfg->cfg.manifest_path());
    std::optional<std::filesystem::path> resume;
    if (resume_dir != nullptr) resume = resume_dir;
    const PretrainResult r = pretrain_run(cfg->cfg.pretrain, manifest, out, digest_of(cfg), run_config_json(cfg->cfg), resume);
    if (summary != nullptr) {
      summary->steps = static_cast<int64_t>(r.log.size());
      summary->initial_loss = r.log.empty() ? 0.0 : r.log.front().loss;
      summary->final_loss = r.log.empty() ? 0.0 : r.log.back().loss;
    }
  });
}

fgmae_status fgmae_evaluate(const fgmae_config* cfg, const char* checkpoint_dir, const char* mode,
                            const char* out_dir, fgmae_metrics* out) {
  clear_metrics(out);
  return guarded([&] {
    require_arg(cfg, "config");
    require_arg(mode, "mode");
    const auto dir = make_dir(out_dir);
    const RunConfig& rc = cfg->cfg;
    const SceneManifest manifest = SceneManifest::load(rc.probe_manifest_path());
    FgMaeModel model = load_model(rc, checkpoint_dir);
    const std::string m = mode;
    TransferResult r;
    if (m == "linear") {
      r = linear_probe_train(model, manifest, rc.probe);
    } else if (m == "finetune") {
      r = fine_tune(model, manifest, rc.finetune);
    } else if (m == "segmentation") {
      r = segmentation_probe(model, manifest, rc.probe);
    } else {
      fail(ErrorKind::Config, "unknown evaluation mode '" + m + "' (expected linear, finetune or segmentation)");
    }
    write_metrics_csv(dir / "metrics.csv", r.report, digest_of(cfg));
    write_per_class_csv(dir / "per_class.csv", r.report, digest_of(cfg));
    fill_metrics(r.report, out);
  });
}

fgmae_status fgmae_ablate(const fgmae_config* cfg, const char* out_dir) {
  return guarded([&] {
    require_arg(cfg, "config");
    const auto dir = make_dir(out_dir);
    const RunConfig& rc = cfg->cfg;
    const SceneManifest data = SceneManifest::load(rc.manifest_path());
    const SceneManifest probe = SceneManifest::load(rc.probe_manifest_path());
    const AblationTable table = feature_ablation_study(rc.ablation_config(), data, probe, [](const AblationRow& row) {
      log::info("ablation " + row.spec + " seed " + row.seed + " " + row.metric + "=" + std::to_string(row.value));
    });
    write_ablation_csv(dir / "ablation.csv", table, digest_of(cfg));
  });
}

fgmae_status fgmae_metrics_masks(const fgmae_tensor* pred, const fgmae_tensor* label, int n_classes, int ignore_index,
                                 fgmae_metrics* out) {
  clear_metrics(out);
  return guarded([&] {
    require_arg(pred, "pred");
    require_arg(label, "label");
    require(pred->value.numel() == label->value.numel(), ErrorKind::Geometry, "masks differ in size");
    const SegmentationReport r = metric_miou(class_ids(pred->value), class_ids(label->value), n_classes, ignore_index);
    if (out != nullptr) {
      out->oa = r.oa;
      out->aa = r.aa;
      out->miou = r.miou;
      out->test_samples = pred->value.numel();
    }
  });
}

fgmae_status fgmae_metrics_multilabel(const fgmae_tensor* scores, const fgmae_tensor* labels, fgmae_metrics* out) {
  clear_metrics(out);
  return guarded([&] {
    require_arg(scores, "scores");
    require_arg(labels, "labels");
    const ApReport ap = metric_map(scores->value, labels->value);
    const F1Report f1 = metric_f1(threshold(scores->value, 0.5), labels->value);
    if (out != nullptr) {
      out->map = ap.map;
      out->f1 = f1.macro;
      out->test_samples = scores->value.dim(0);
    }
  });
}

fgmae_status fgmae_render(const fgmae_tensor* t, const char* kind, int cell_size, const char* comment,
                          const char* out_ppm) {
  return guarded([&] {
    require_arg(t, "tensor");
    require_arg(kind, "kind");
    require_arg(out_ppm, "output path");
    const Tensor& v = t->value;
    const std::string k = kind;
    RgbImage img;
    if (k == "ndi") {
      require(v.rank() == 3 && v.dim(0) == 3, ErrorKind::Geometry, "ndi render expects 3 x H x W, got " + shape_str(v.shape()));
      img = render_ndi(v);
    } else if (k == "hog") {
      require(v.rank() == 3 || v.rank() == 4, ErrorKind::Geometry, "hog render expects [C,] Hc x Wc x bins");
      require(cell_size >= 1, ErrorKind::Config, "cell size must be >= 1");
      Tensor cells = v;
      if (v.rank() == 4) {
        const std::int64_t c = v.dim(0), n = v.numel() / c;
        const auto x = v.to_vector();
        std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
        for (std::int64_t ch = 0; ch < c; ++ch) {
          for (std::int64_t i = 0; i < n; ++i) mean[static_cast<std::size_t>(i)] += x[static_cast<std::size_t>(ch * n + i)] / static_cast<double>(c);
        }
        cells = Tensor::from_values({v.dim(1), v.dim(2), v.dim(3)}, mean, Dtype::F64);
      }
      img = render_hog(cells, cell_size);
    } else if (k == "sar") {
      require(v.rank() == 3, ErrorKind::Geometry, "sar render expects C x H x W");
      img = render_sar(v);
    } else {
      fail(ErrorKind::Config, "unknown render kind '" + k + "' (expected ndi, hog or sar)");
    }
    write_ppm(out_ppm, img, comment != nullptr ? comment : "");
  });
}

fgmae_status fgmae_reconstruct(const fgmae_config* cfg, const char* checkpoint_dir, const char* scene_path,
                               const char* out_ppm) {
  return guarded([&] {
    require_arg(cfg, "config");
    require_arg(scene_path, "scene");
    require_arg(out_ppm, "output path");
    const RunConfig& rc = cfg->cfg;
    const ModelConfig& mc = rc.pretrain.model;
    FgMaeModel model = load_model(rc, checkpoint_dir);
    Tensor img = read_tensor(scene_path);
    require(img.rank() == 3 && img.dim(0) <= mc.in_channels, ErrorKind::Geometry,
            "scene shape " + shape_str(img.shape()) + " does not fit the model input");
    if (img.dim(1) != mc.image_size || img.dim(2) != mc.image_size) img = resize_bilinear(img, mc.image_size, mc.image_size);
    if (img.dim(0) != mc.in_channels) img = zero_pad_channels(img, mc.in_channels);
    const Tensor batch = stack_images({img}, mc.in_channels, mc.dtype);
    Rng rng = Rng(rc.seed).split("reconstruct");
    const MaskPlan plan = make_mask_plan(1, mc.num_patches(), mc.mask_ratio, rng);
    Tape tape(false);
    Bound p = model.bind(tape, false);
    Var enc = model.encode(p, tape.constant(patchify(batch, mc.patch)), plan);
    std::vector<Tensor> preds;
    for (const Var& v : model.predict_heads(p, model.decode(p, enc, plan))) preds.push_back(v.value().to(Dtype::F64));
    const PatchGrid grid = patch_grid(mc.image_size, mc.image_size, mc.patch);
    write_ppm(out_ppm, render_reconstruction(preds, rc.pretrain.feature, mc.patch, mc.in_channels, grid),
              "digest=" + digest_of(cfg));
  });
}

}  // extern "C"
