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
#include <string>
#include <vector>

#include "fgmae/model/masking.hpp"
#include "fgmae/tensor/ops.hpp"
#include "fgmae/tensor/rng.hpp"

namespace fgmae {

struct ModelConfig {
  int image_size = 224;
  int patch = 16;
  int in_channels = 2;
  int enc_dim = 384;
  int enc_depth = 12;
  int enc_heads = 6;
  int dec_dim = 256;
  int dec_depth = 2;
  int dec_heads = 8;
  int mlp_ratio = 4;
  double mask_ratio = 0.7;
  std::vector<std::int64_t> head_widths{72};  // one head, or HOG then NDI
  std::vector<double> head_weights{1.0};
  bool zero_init_heads = false;
  Dtype dtype = Dtype::F32;

  std::int64_t patches_per_side() const { return image_size / patch; }
  std::int64_t num_patches() const { return patches_per_side() * patches_per_side(); }
  std::int64_t patch_dim() const { return static_cast<std::int64_t>(patch) * patch * in_channels; }
  void validate() const;

  // Encoder sizes of ViT-S/B/L/H ("vit-s", ...); other fields keep defaults.
  static ModelConfig preset(const std::string& name);
};

struct Parameter {
  std::string name;
  Tensor value;
  bool decay = true;  // false for norms, biases and the mask token
  int layer = 0;      // 0 patch embedding, 1..depth encoder blocks, depth + 1 beyond
};

// Named parameters in a fixed construction order.
class ParamStore {
 public:
  void add(Parameter p);
  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  std::size_t index(const std::string& name) const;
  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const { return params_[index(name)].value; }
  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  std::int64_t count() const;
  // FNV-1a over names, shapes and raw bytes.
  std::string digest() const;
  std::string digest_prefix(const std::string& prefix) const;

 private:
  std::vector<Parameter> params_;
};

// Parameters placed on a tape as leaves, addressed by store index.
struct Bound {
  Tape* tape = nullptr;
  std::vector<Var> vars;
  const ParamStore* store = nullptr;
  Var operator[](const std::string& name) const { return vars[store->index(name)]; }
};

Tensor sincos_pos_embed_2d(int dim, std::int64_t grid, Dtype dtype);

class FgMaeModel {
 public:
  // Truncated-normal (std 0.02) weights, zero biases, unit norm scales; each
  // parameter draws from its own stream split off `rng` by name.
  FgMaeModel(ModelConfig config, const Rng& rng);

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  Bound bind(Tape& tape, bool trainable) const;

  // patches [B, L, p*p*C] -> encoded visible tokens [B, L - L_m, K_en].
  Var encode(const Bound& p, Var patches, const MaskPlan& plan) const;
  // encoded -> [B, L, K_de] with mask tokens at the masked positions.
  Var decode(const Bound& p, Var encoded, const MaskPlan& plan) const;
  std::vector<Var> predict_heads(const Bound& p, Var decoded) const;

  struct Output {
    std::vector<Var> predictions;
    Var loss;
  };
  Output forward(const Bound& p, Var patches, const MaskPlan& plan, const std::vector<Tensor>& targets) const;

  // Mean of the unmasked encoder tokens, [B, K_en].
  Var pooled_features(const Bound& p, Var patches) const;

 private:
  Var block(const Bound& p, const std::string& prefix, Var x, int heads) const;

  ModelConfig config_;
  ParamStore params_;
  Tensor enc_pos_;
  Tensor dec_pos_;
};

// Mean squared error over masked patches and all feature dims, weighted sum
// across heads. Throws when the plan masks nothing.
Var masked_l2_loss(const std::vector<Var>& predictions, const std::vector<Tensor>& targets, const MaskPlan& plan,
                   const std::vector<double>& weights);

// Multi-head self-attention with scaled dot products; x [B, N, K].
Var multi_head_attention(Var x, Var qkv_w, Var qkv_b, Var proj_w, Var proj_b, int heads);

// Layer-wise lr scale decay^(depth + 1 - layer) for layers 0..depth + 1.
double layer_decay_scale(int layer, int depth, double decay);

}  // namespace fgmae
