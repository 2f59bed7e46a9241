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

#include "fgmae/model/model.hpp"

#include <cmath>
#include <random>

#include "fgmae/core/digest.hpp"
#include "fgmae/core/error.hpp"

namespace fgmae {

void ModelConfig::validate() const {
  require(patch >= 1 && image_size >= patch && image_size % patch == 0, ErrorKind::Config,
          "image size " + std::to_string(image_size) + " is not divisible by patch size " + std::to_string(patch));
  require(in_channels >= 1, ErrorKind::Config, "model needs at least one input channel");
  require(enc_dim > 0 && enc_heads > 0 && enc_dim % enc_heads == 0, ErrorKind::Config,
          "encoder width must be divisible by its head count");
  require(dec_dim > 0 && dec_heads > 0 && dec_dim % dec_heads == 0, ErrorKind::Config,
          "decoder width must be divisible by its head count");
  require(enc_dim % 4 == 0 && dec_dim % 4 == 0, ErrorKind::Config, "widths must be multiples of 4 for 2-D sin-cos embeddings");
  require(enc_depth >= 1 && dec_depth >= 0 && mlp_ratio >= 1, ErrorKind::Config, "invalid depth or MLP ratio");
  require(mask_ratio >= 0.0 && mask_ratio < 1.0, ErrorKind::Config, "masking ratio must lie in [0, 1)");
  require(!head_widths.empty() && head_widths.size() <= 2, ErrorKind::Config, "one or two prediction heads");
  require(head_weights.size() == head_widths.size(), ErrorKind::Config, "one loss weight per head");
  for (auto w : head_widths) require(w > 0, ErrorKind::Config, "head width must be positive");
}

ModelConfig ModelConfig::preset(const std::string& name) {
  ModelConfig c;
  if (name == "vit-s") {
    c.enc_dim = 384, c.enc_depth = 12, c.enc_heads = 6;
  } else if (name == "vit-b") {
    c.enc_dim = 768, c.enc_depth = 12, c.enc_heads = 12;
  } else if (name == "vit-l") {
    c.enc_dim = 1024, c.enc_depth = 24, c.enc_heads = 16;
  } else if (name == "vit-h") {
    c.enc_dim = 1280, c.enc_depth = 32, c.enc_heads = 16;
  } else {
    fail(ErrorKind::Config, "unknown model preset '" + name + "' (expected vit-s, vit-b, vit-l or vit-h)");
  }
  return c;
}

void ParamStore::add(Parameter p) {
  require(!contains(p.name), ErrorKind::Internal, "duplicate parameter " + p.name);
  params_.push_back(std::move(p));
}

std::size_t ParamStore::index(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  fail(ErrorKind::InvalidArgument, "no parameter named " + name);
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::int64_t ParamStore::count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

std::string ParamStore::digest_prefix(const std::string& prefix) const {
  Fnv1a h;
  for (const auto& p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) != 0) continue;
    h.update(p.name);
    h.update(shape_str(p.value.shape()));
    auto bytes = p.value.bytes();
    h.update(bytes.data(), bytes.size());
  }
  return h.hex();
}

std::string ParamStore::digest() const { return digest_prefix(""); }

Tensor sincos_pos_embed_2d(int dim, std::int64_t grid, Dtype dtype) {
  require(dim % 4 == 0, ErrorKind::Config, "sin-cos embedding width must be a multiple of 4");
  const int quarter = dim / 4;
  std::vector<double> v(static_cast<std::size_t>(grid * grid * dim));
  for (std::int64_t r = 0; r < grid; ++r) {
    for (std::int64_t c = 0; c < grid; ++c) {
      double* row = v.data() + (r * grid + c) * dim;
      for (int i = 0; i < quarter; ++i) {
        const double omega = 1.0 / std::pow(10000.0, static_cast<double>(i) / quarter);
        row[i] = std::sin(static_cast<double>(r) * omega);
        row[quarter + i] = std::cos(static_cast<double>(r) * omega);
        row[2 * quarter + i] = std::sin(static_cast<double>(c) * omega);
        row[3 * quarter + i] = std::cos(static_cast<double>(c) * omega);
      }
    }
  }
  return Tensor::from_values({grid * grid, dim}, v, dtype);
}

namespace {

Tensor truncated_normal(const Shape& shape, double stddev, Rng rng, Dtype dtype) {
  Tensor t = Tensor::zeros(shape, dtype);
  std::normal_distribution<double> dist(0.0, 1.0);
  visit_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    for (T& x : t.mutable_data<T>()) {
      double z;
      do {
        z = dist(rng);
      } while (std::abs(z) > 2.0);
      x = static_cast<T>(z * stddev);
    }
    return 0;
  });
  return t;
}

constexpr double kInitStd = 0.02;

}  // namespace

FgMaeModel::FgMaeModel(ModelConfig config, const Rng& rng) : config_(std::move(config)) {
  config_.validate();
  const Dtype dt = config_.dtype;
  const std::int64_t ke = config_.enc_dim, kd = config_.dec_dim;
  const int top = config_.enc_depth + 1;

  auto weight = [&](const std::string& name, Shape shape, int layer) {
    params_.add({name, truncated_normal(shape, kInitStd, rng.split(name), dt), true, layer});
  };
  auto bias = [&](const std::string& name, std::int64_t n, int layer) {
    params_.add({name, Tensor::zeros({n}, dt), false, layer});
  };
  auto norm = [&](const std::string& prefix, std::int64_t n, int layer) {
    params_.add({prefix + ".weight", Tensor::full({n}, 1.0, dt), false, layer});
    bias(prefix + ".bias", n, layer);
  };
  auto linear = [&](const std::string& prefix, std::int64_t in, std::int64_t out, int layer) {
    weight(prefix + ".weight", {in, out}, layer);
    bias(prefix + ".bias", out, layer);
  };
  auto block = [&](const std::string& prefix, std::int64_t k, int layer) {
    norm(prefix + ".norm1", k, layer);
    linear(prefix + ".attn.qkv", k, 3 * k, layer);
    linear(prefix + ".attn.proj", k, k, layer);
    norm(prefix + ".norm2", k, layer);
    linear(prefix + ".mlp.fc1", k, k * config_.mlp_ratio, layer);
    linear(prefix + ".mlp.fc2", k * config_.mlp_ratio, k, layer);
  };

  linear("patch_embed", config_.patch_dim(), ke, 0);
  for (int i = 0; i < config_.enc_depth; ++i) block("encoder.blocks." + std::to_string(i), ke, i + 1);
  norm("encoder.norm", ke, top);
  linear("decoder.embed", ke, kd, top);
  params_.add({"decoder.mask_token", truncated_normal({kd}, kInitStd, rng.split("decoder.mask_token"), dt), false, top});
  for (int i = 0; i < config_.dec_depth; ++i) block("decoder.blocks." + std::to_string(i), kd, top);
  norm("decoder.norm", kd, top);
  for (std::size_t h = 0; h < config_.head_widths.size(); ++h) {
    const std::string prefix = "head." + std::to_string(h);
    if (config_.zero_init_heads) {
      params_.add({prefix + ".weight", Tensor::zeros({kd, config_.head_widths[h]}, dt), true, top});
      bias(prefix + ".bias", config_.head_widths[h], top);
    } else {
      linear(prefix, kd, config_.head_widths[h], top);
    }
  }
  enc_pos_ = sincos_pos_embed_2d(config_.enc_dim, config_.patches_per_side(), dt);
  dec_pos_ = sincos_pos_embed_2d(config_.dec_dim, config_.patches_per_side(), dt);
}

Bound FgMaeModel::bind(Tape& tape, bool trainable) const {
  Bound b;
  b.tape = &tape;
  b.store = &params_;
  b.vars.reserve(params_.size());
  for (const auto& p : params_.all()) b.vars.push_back(tape.leaf(p.value, trainable));
  return b;
}

Var multi_head_attention(Var x, Var qkv_w, Var qkv_b, Var proj_w, Var proj_b, int heads) {
  const Shape& s = x.shape();
  require(s.size() == 3 && s[2] % heads == 0, ErrorKind::Shape, "attention expects B x N x K with K divisible by heads");
  const std::int64_t b = s[0], n = s[1], k = s[2], d = k / heads;
  Var qkv = ag::reshape(ag::linear(x, qkv_w, qkv_b), {b, n, 3, heads, d});
  qkv = ag::permute(qkv, {2, 0, 3, 1, 4});  // 3, B, H, N, D
  auto part = [&](int i) { return ag::reshape(ag::slice(qkv, 0, i, 1), {b, heads, n, d}); };
  Var q = part(0), kk = part(1), v = part(2);
  Var att = ag::softmax(ag::scale(ag::bmm(q, kk, true), 1.0 / std::sqrt(static_cast<double>(d))));
  Var out = ag::permute(ag::bmm(att, v), {0, 2, 1, 3});
  return ag::linear(ag::reshape(out, {b, n, k}), proj_w, proj_b);
}

Var FgMaeModel::block(const Bound& p, const std::string& prefix, Var x, int heads) const {
  Var h = ag::layer_norm(x, p[prefix + ".norm1.weight"], p[prefix + ".norm1.bias"]);
  x = ag::add(x, multi_head_attention(h, p[prefix + ".attn.qkv.weight"], p[prefix + ".attn.qkv.bias"],
                                      p[prefix + ".attn.proj.weight"], p[prefix + ".attn.proj.bias"], heads));
  h = ag::layer_norm(x, p[prefix + ".norm2.weight"], p[prefix + ".norm2.bias"]);
  h = ag::gelu(ag::linear(h, p[prefix + ".mlp.fc1.weight"], p[prefix + ".mlp.fc1.bias"]));
  return ag::add(x, ag::linear(h, p[prefix + ".mlp.fc2.weight"], p[prefix + ".mlp.fc2.bias"]));
}

Var FgMaeModel::encode(const Bound& p, Var patches, const MaskPlan& plan) const {
  const Shape& s = patches.shape();
  require(s.size() == 3 && s[1] == config_.num_patches() && s[2] == config_.patch_dim(), ErrorKind::Shape,
          "encoder input " + shape_str(s) + " does not match the patch embedding");
  require(plan.batch == s[0] && plan.length == s[1], ErrorKind::Shape, "mask plan does not match the batch");
  Var x = ag::linear(patches, p["patch_embed.weight"], p["patch_embed.bias"]);
  x = ag::add(x, p.tape->constant(enc_pos_));
  x = ag::gather_rows(x, plan.ids_keep);
  for (int i = 0; i < config_.enc_depth; ++i) x = block(p, "encoder.blocks." + std::to_string(i), x, config_.enc_heads);
  return ag::layer_norm(x, p["encoder.norm.weight"], p["encoder.norm.bias"]);
}

Var FgMaeModel::decode(const Bound& p, Var encoded, const MaskPlan& plan) const {
  const Shape& s = encoded.shape();
  require(s.size() == 3 && s[0] == plan.batch && s[1] == plan.kept() && s[2] == config_.enc_dim, ErrorKind::Shape,
          "decoder input " + shape_str(s) + " is inconsistent with the mask plan");
  require(plan.length == config_.num_patches(), ErrorKind::Shape, "mask plan length differs from the patch count");
  Var x = ag::linear(encoded, p["decoder.embed.weight"], p["decoder.embed.bias"]);
  if (plan.masked() > 0) {
    Var tokens = ag::broadcast_to(p["decoder.mask_token"], {plan.batch, plan.masked(), config_.dec_dim});
    const Var parts[] = {x, tokens};
    x = ag::concat(parts, 1);
  }
  x = ag::gather_rows(x, plan.ids_restore);
  x = ag::add(x, p.tape->constant(dec_pos_));
  for (int i = 0; i < config_.dec_depth; ++i) x = block(p, "decoder.blocks." + std::to_string(i), x, config_.dec_heads);
  return ag::layer_norm(x, p["decoder.norm.weight"], p["decoder.norm.bias"]);
}

std::vector<Var> FgMaeModel::predict_heads(const Bound& p, Var decoded) const {
  require(decoded.shape().back() == config_.dec_dim, ErrorKind::Shape, "decoded width does not match the heads");
  std::vector<Var> out;
  for (std::size_t h = 0; h < config_.head_widths.size(); ++h) {
    const std::string prefix = "head." + std::to_string(h);
    out.push_back(ag::linear(decoded, p[prefix + ".weight"], p[prefix + ".bias"]));
  }
  return out;
}

FgMaeModel::Output FgMaeModel::forward(const Bound& p, Var patches, const MaskPlan& plan,
                                       const std::vector<Tensor>& targets) const {
  Output out;
  out.predictions = predict_heads(p, decode(p, encode(p, patches, plan), plan));
  out.loss = masked_l2_loss(out.predictions, targets, plan, config_.head_weights);
  return out;
}

Var FgMaeModel::pooled_features(const Bound& p, Var patches) const {
  const MaskPlan plan = identity_plan(patches.shape()[0], patches.shape()[1]);
  return ag::mean_axis(encode(p, patches, plan), 1);
}

Var masked_l2_loss(const std::vector<Var>& predictions, const std::vector<Tensor>& targets, const MaskPlan& plan,
                   const std::vector<double>& weights) {
  require(!predictions.empty() && predictions.size() == targets.size() && weights.size() == targets.size(),
          ErrorKind::Shape, "one target and weight per prediction head");
  require(plan.masked() > 0, ErrorKind::InvalidArgument, "masked loss needs at least one masked patch");
  Var total;
  for (std::size_t h = 0; h < predictions.size(); ++h) {
    require(predictions[h].shape() == targets[h].shape(), ErrorKind::Shape,
            "prediction " + shape_str(predictions[h].shape()) + " vs target " + shape_str(targets[h].shape()));
    Tape* tape = predictions[h].tape();
    Var pred = ag::gather_rows(predictions[h], plan.ids_mask);
    Var target = ag::gather_rows(tape->constant(targets[h].to(predictions[h].dtype())), plan.ids_mask);
    Var term = ag::mse(pred, target);
    if (weights[h] != 1.0) term = ag::scale(term, weights[h]);
    total = total.valid() ? ag::add(total, term) : term;
  }
  return total;
}

double layer_decay_scale(int layer, int depth, double decay) {
  require(layer >= 0 && layer <= depth + 1, ErrorKind::InvalidArgument, "layer id outside 0..depth+1");
  return std::pow(decay, depth + 1 - layer);
}

}  // namespace fgmae
