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

#ifndef FGMAE_FGMAE_H
#define FGMAE_FGMAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(FGMAE_BUILDING_LIBRARY)
#define FGMAE_API __attribute__((visibility("default")))
#else
#define FGMAE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum fgmae_status {
  FGMAE_OK = 0,
  FGMAE_ERR_INTERNAL = 1,
  FGMAE_ERR_CONFIG = 2,    /* bad config, flag or argument */
  FGMAE_ERR_IO = 3,        /* missing or unwritable file */
  FGMAE_ERR_GEOMETRY = 4,  /* feature/geometry/shape mismatch */
  FGMAE_ERR_NONFINITE = 5  /* non-finite loss or gradient */
} fgmae_status;

typedef enum fgmae_dtype { FGMAE_F32 = 1, FGMAE_F64 = 2 } fgmae_dtype;

typedef enum fgmae_log_level { FGMAE_LOG_DEBUG = 0, FGMAE_LOG_INFO = 1, FGMAE_LOG_WARN = 2, FGMAE_LOG_ERROR = 3 } fgmae_log_level;

typedef struct fgmae_config fgmae_config;
typedef struct fgmae_tensor fgmae_tensor;

/* Message of the last failed call on this thread; never NULL. */
FGMAE_API const char* fgmae_last_error(void);
/* Short tag for a status: "ok", "internal", "config", "io", "geometry", "nonfinite". */
FGMAE_API const char* fgmae_status_tag(fgmae_status status);
FGMAE_API const char* fgmae_version(void);

typedef void (*fgmae_log_fn)(fgmae_log_level level, const char* message, void* user);
/* NULL restores the default stderr sink. */
FGMAE_API void fgmae_set_log_callback(fgmae_log_fn fn, void* user);

/* ---- run config ---- */

FGMAE_API fgmae_status fgmae_config_load(const char* path, fgmae_config** out);
/* base_dir resolves relative data paths; may be NULL. */
FGMAE_API fgmae_status fgmae_config_parse(const char* json, const char* base_dir, fgmae_config** out);
FGMAE_API void fgmae_config_free(fgmae_config* cfg);
/* 1 when the document set "seed" itself. */
FGMAE_API int fgmae_config_has_seed(const fgmae_config* cfg);
FGMAE_API fgmae_status fgmae_config_set_seed(fgmae_config* cfg, uint64_t seed);
FGMAE_API uint64_t fgmae_config_seed(const fgmae_config* cfg);
/* 16 hex digits plus NUL; buf must hold at least 17 bytes. */
FGMAE_API fgmae_status fgmae_config_digest(const fgmae_config* cfg, char* buf, size_t len);
/* Overrides by dotted key, e.g. ("pretrain.epochs", "3"); value is JSON text. */
FGMAE_API fgmae_status fgmae_config_override(fgmae_config* cfg, const char* key, const char* json_value);
/* Applies count overrides, then validates once; on failure cfg is unchanged. */
FGMAE_API fgmae_status fgmae_config_override_many(fgmae_config* cfg, const char* const* keys,
                                                  const char* const* json_values, size_t count);

/* ---- tensors ---- */

FGMAE_API fgmae_status fgmae_tensor_create(const int64_t* dims, int rank, const double* values, fgmae_dtype dtype,
                                           fgmae_tensor** out);
FGMAE_API fgmae_status fgmae_tensor_read(const char* path, fgmae_tensor** out);
FGMAE_API fgmae_status fgmae_tensor_write(const fgmae_tensor* t, const char* path);
FGMAE_API void fgmae_tensor_free(fgmae_tensor* t);
FGMAE_API int fgmae_tensor_rank(const fgmae_tensor* t);
FGMAE_API int64_t fgmae_tensor_dim(const fgmae_tensor* t, int axis);
FGMAE_API int64_t fgmae_tensor_numel(const fgmae_tensor* t);
FGMAE_API fgmae_dtype fgmae_tensor_dtype(const fgmae_tensor* t);
/* Copies min(count, numel) values as doubles. */
FGMAE_API fgmae_status fgmae_tensor_values(const fgmae_tensor* t, double* out, size_t count);

/* ---- pipeline ---- */

typedef struct fgmae_synth_options {
  const char* modality; /* "MS" or "SAR" */
  int locations;
  uint64_t seed;
  int looks;
  int size;
  int structures;
} fgmae_synth_options;

FGMAE_API void fgmae_synth_defaults(fgmae_synth_options* opts);
/* Writes locations x 4 seasons of FGMR scenes plus manifest.csv into out_dir. */
FGMAE_API fgmae_status fgmae_synth(const char* out_dir, const fgmae_synth_options* opts);

/* feature: "hog", "ndi", "canny", "sift", "raw". Input C x H x W or B x C x H x W;
   output keeps the batch axis only when the input had one. cfg (nullable)
   supplies descriptor parameters and the band map. */
FGMAE_API fgmae_status fgmae_extract(const fgmae_tensor* image, const char* feature, const fgmae_config* cfg,
                                     fgmae_tensor** out);

typedef struct fgmae_pretrain_summary {
  int64_t steps;
  double initial_loss;
  double final_loss;
} fgmae_pretrain_summary;

/* Trains on data.manifest and writes loss.csv, epoch_loss.csv and checkpoint/
   under out_dir. resume_dir may be NULL. summary may be NULL. */
FGMAE_API fgmae_status fgmae_pretrain(const fgmae_config* cfg, const char* out_dir, const char* resume_dir,
                                      fgmae_pretrain_summary* summary);

typedef struct fgmae_metrics {
  double oa, aa, map, f1, miou; /* NaN when not applicable */
  int64_t train_samples, test_samples;
} fgmae_metrics;

/* mode: "linear", "finetune" or "segmentation". checkpoint_dir may be NULL
   for a randomly initialised encoder. Writes metrics.csv and per_class.csv. */
FGMAE_API fgmae_status fgmae_evaluate(const fgmae_config* cfg, const char* checkpoint_dir, const char* mode,
                                      const char* out_dir, fgmae_metrics* out);

/* Writes ablation.csv under out_dir. */
FGMAE_API fgmae_status fgmae_ablate(const fgmae_config* cfg, const char* out_dir);

/* Masks hold integer class ids (any shape, equal sizes). */
FGMAE_API fgmae_status fgmae_metrics_masks(const fgmae_tensor* pred, const fgmae_tensor* label, int n_classes,
                                           int ignore_index, fgmae_metrics* out);
/* scores and labels are N x K. */
FGMAE_API fgmae_status fgmae_metrics_multilabel(const fgmae_tensor* scores, const fgmae_tensor* labels,
                                                fgmae_metrics* out);

/* kind: "ndi" (3 x H x W), "hog" (C x Hc x Wc x bins or Hc x Wc x bins), "sar" (C x H x W).
   cell_size is used by "hog" only. comment is embedded in the PPM header. */
FGMAE_API fgmae_status fgmae_render(const fgmae_tensor* t, const char* kind, int cell_size, const char* comment,
                                    const char* out_ppm);

/* Masks one scene with the config's ratio and seed, predicts the targets and
   renders the prediction of the first head family. */
FGMAE_API fgmae_status fgmae_reconstruct(const fgmae_config* cfg, const char* checkpoint_dir, const char* scene_path,
                                         const char* out_ppm);

#ifdef __cplusplus
}
#endif

#endif /* FGMAE_FGMAE_H */
