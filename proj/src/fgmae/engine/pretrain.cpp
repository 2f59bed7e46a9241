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

#include "fgmae/engine/pretrain.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "fgmae/core/error.hpp"
#include "fgmae/core/log.hpp"
#include "fgmae/data/fgmr.hpp"
#include "fgmae/model/patchify.hpp"

namespace fgmae {

void PretrainConfig::finalize() {
  model.head_widths = feature.target_widths(model.in_channels, model.patch);
  if (model.head_weights.size() != model.head_widths.size()) model.head_weights.assign(model.head_widths.size(), 1.0);
  augment.out_size = model.image_size;
}

void PretrainConfig::validate() const {
  model.validate();
  feature.validate(model.in_channels, model.patch);
  augment.validate();
  require(epochs >= 1, ErrorKind::Config, "epochs must be >= 1");
  require(batch >= 1, ErrorKind::Config, "batch must be >= 1");
  require(warmup_epochs >= 0 && warmup_epochs <= epochs, ErrorKind::Config, "warmup epochs must lie in [0, epochs]");
  require(base_lr > 0.0 && min_lr >= 0.0 && min_lr <= base_lr, ErrorKind::Config, "learning rates must satisfy 0 <= min <= base");
  require(weight_decay >= 0.0 && clip_norm >= 0.0, ErrorKind::Config, "weight decay and clip norm must be non-negative");
  require(checkpoint_every >= 0, ErrorKind::Config, "checkpoint interval must be non-negative");
  require(augment.out_size == model.image_size, ErrorKind::Config, "crop size must equal the model image size");
}

Tensor stack_images(const std::vector<Tensor>& images, std::int64_t channels, Dtype dtype) {
  require(!images.empty(), ErrorKind::InvalidArgument, "empty batch");
  const Shape& first = images[0].shape();
  require(first.size() == 3, ErrorKind::Shape, "batch images must be C x H x W");
  const std::int64_t h = first[1], w = first[2];
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(images.size() * channels * h * w));
  for (const Tensor& img : images) {
    require(img.rank() == 3 && img.dim(1) == h && img.dim(2) == w, ErrorKind::Shape, "batch images differ in size");
    const Tensor padded = img.dim(0) == channels ? img : zero_pad_channels(img, static_cast<int>(channels));
    const auto x = padded.to_vector();
    v.insert(v.end(), x.begin(), x.end());
  }
  return Tensor::from_values({static_cast<std::int64_t>(images.size()), channels, h, w}, v, dtype);
}

namespace {

PretrainConfig finalized(PretrainConfig cfg) {
  cfg.finalize();
  cfg.validate();
  return cfg;
}

}  // namespace

Pretrainer::Pretrainer(PretrainConfig cfg, SceneManifest manifest, std::string config_digest, std::string config_json)
    : cfg_(finalized(std::move(cfg))),
      manifest_(std::move(manifest)),
      digest_(std::move(config_digest)),
      config_json_(std::move(config_json)),
      model_(cfg_.model, Rng(cfg_.seed).split("init")),
      optimizer_(AdamWHyper{0.9, 0.999, 1e-8, cfg_.weight_decay}) {
  require(!manifest_.locations().empty(), ErrorKind::Config, "manifest has no locations");
  const auto n = static_cast<std::int64_t>(manifest_.locations().size());
  steps_per_epoch_ = (n + cfg_.batch - 1) / cfg_.batch;
  schedule_.base_lr = cfg_.base_lr;
  schedule_.min_lr = cfg_.min_lr;
  schedule_.total_steps = total_steps();
  schedule_.warmup_steps = steps_per_epoch_ * cfg_.warmup_epochs;
  for (const auto& p : model_.params().all()) optimizer_.add_slot(p.value, p.decay);
}

double Pretrainer::lr_for(std::int64_t step) const { return lr_at(step, schedule_); }

PreparedBatch Pretrainer::prepare(std::int64_t step) const {
  require(step >= 0 && step < total_steps(), ErrorKind::InvalidArgument, "step outside the run");
  const Rng root(cfg_.seed);
  const std::int64_t epoch = step / steps_per_epoch_, within = step % steps_per_epoch_;
  Rng order_rng = root.split("order").split(static_cast<std::uint64_t>(epoch));
  const auto order = order_rng.permutation(static_cast<std::int64_t>(manifest_.locations().size()));
  const std::int64_t begin = within * cfg_.batch;
  const std::int64_t end = std::min<std::int64_t>(begin + cfg_.batch, static_cast<std::int64_t>(order.size()));

  PreparedBatch batch;
  std::vector<Tensor> views;
  for (std::int64_t i = begin; i < end; ++i) {
    const std::string& loc = manifest_.locations()[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    Rng rng = root.split("augment").split(static_cast<std::uint64_t>(step)).split(static_cast<std::uint64_t>(i - begin));
    const ManifestEntry& scene = select_season(manifest_, loc, rng);
    Tensor img = read_tensor(manifest_.resolve(scene));
    require(img.rank() == 3 && img.dim(0) <= cfg_.model.in_channels, ErrorKind::Geometry,
            "scene " + scene.path + " has shape " + shape_str(img.shape()) + ", incompatible with the model input");
    if (cfg_.augment_enabled) {
      img = random_resized_crop(img, cfg_.augment, rng);
      img = horizontal_flip(img, cfg_.augment.flip_prob, rng);
    } else if (img.dim(1) != cfg_.model.image_size || img.dim(2) != cfg_.model.image_size) {
      img = resize_bilinear(img, cfg_.model.image_size, cfg_.model.image_size);
    }
    batch.locations.push_back(loc);
    views.push_back(std::move(img));
  }
  batch.images = stack_images(views, cfg_.model.in_channels, cfg_.model.dtype);
  batch.targets = assemble_targets(batch.images, cfg_.feature, cfg_.model.patch);
  Rng mask_rng = root.split("mask").split(static_cast<std::uint64_t>(step));
  batch.plan = make_mask_plan(batch.images.dim(0), cfg_.model.num_patches(), cfg_.model.mask_ratio, mask_rng);
  return batch;
}

const LossEntry& Pretrainer::step() {
  require(!done(), ErrorKind::InvalidArgument, "pretraining already finished");
  const PreparedBatch batch = prepare(step_);
  const double lr = lr_for(step_);
  auto diagnose = [&](const std::string& what, double grad_norm) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "non-finite %s at step %lld (lr %.6g, grad norm %.6g)", what.c_str(),
                  static_cast<long long>(step_), lr, grad_norm);
    fail(ErrorKind::NonFinite, buf);
  };

  Tape tape;
  Bound p = model_.bind(tape, true);
  Var loss;
  try {
    loss = model_.forward(p, tape.constant(patchify(batch.images, cfg_.model.patch)), batch.plan, batch.targets.values).loss;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NonFinite) diagnose(std::string("forward value (") + e.what() + ")", std::nan(""));
    throw;
  }
  tape.backward(loss);
  std::vector<Tensor> grads;
  grads.reserve(p.vars.size());
  for (const Var& v : p.vars) grads.push_back(tape.grad(v));
  const double norm = cfg_.clip_norm > 0.0 ? clip_grad_norm(grads, cfg_.clip_norm) : global_grad_norm(grads);
  if (!std::isfinite(norm)) diagnose("gradient", norm);

  std::vector<Tensor> params;
  params.reserve(grads.size());
  for (auto& prm : model_.params().all()) params.push_back(std::move(prm.value));
  optimizer_.step(params, grads, lr);
  for (std::size_t i = 0; i < params.size(); ++i) model_.params()[i].value = std::move(params[i]);

  log_.push_back({step_, lr, loss.value().item()});
  ++step_;
  return log_.back();
}

void Pretrainer::run_until(std::int64_t stop) {
  stop = std::min(stop, total_steps());
  while (step_ < stop) step();
}

std::vector<double> Pretrainer::epoch_means() const {
  std::vector<double> means;
  for (std::size_t start = 0; start < log_.size(); start += static_cast<std::size_t>(steps_per_epoch_)) {
    const std::size_t end = std::min(log_.size(), start + static_cast<std::size_t>(steps_per_epoch_));
    double sum = 0.0;
    for (std::size_t i = start; i < end; ++i) sum += log_[i].loss;
    means.push_back(sum / static_cast<double>(end - start));
  }
  return means;
}

CheckpointState Pretrainer::checkpoint_state() const {
  CheckpointState s;
  s.step = step_;
  s.optimizer_steps = optimizer_.steps();
  s.config_digest = digest_;
  s.config_json = config_json_;
  s.history = log_;
  const auto& params = model_.params().all();
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.params.push_back({params[i].name, params[i].value});
    s.moment_m.push_back({params[i].name, optimizer_.slots()[i].moments.m});
    s.moment_v.push_back({params[i].name, optimizer_.slots()[i].moments.v});
  }
  return s;
}

void load_parameters(FgMaeModel& model, const CheckpointState& s) {
  auto& params = model.params().all();
  require(s.params.size() == params.size(), ErrorKind::Shape,
          "checkpoint holds " + std::to_string(s.params.size()) + " parameters, model has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& src = s.params[i];
    require(src.name == params[i].name, ErrorKind::Shape, "checkpoint parameter " + src.name + " where " + params[i].name + " expected");
    require(src.value.shape() == params[i].value.shape(), ErrorKind::Shape,
            "parameter " + src.name + " has shape " + shape_str(src.value.shape()) + " in the checkpoint but " +
                shape_str(params[i].value.shape()) + " in the model");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = s.params[i].value.to(model.config().dtype);
}

FgMaeModel model_from_checkpoint(const ModelConfig& config, const CheckpointState& state) {
  FgMaeModel model(config, Rng(0));
  load_parameters(model, state);
  return model;
}

void Pretrainer::restore(const CheckpointState& s) {
  const auto& params = model_.params().all();
  require(s.moment_m.size() == s.params.size() && s.moment_v.size() == s.params.size(), ErrorKind::Shape,
          "checkpoint optimizer state does not cover every parameter");
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    require(s.moment_m[i].value.shape() == s.params[i].value.shape() &&
                s.moment_v[i].value.shape() == s.params[i].value.shape(),
            ErrorKind::Shape, "optimizer moments of " + s.params[i].name + " have the wrong shape");
  }
  if (!digest_.empty() && s.config_digest != digest_) {
    log::warn("checkpoint config digest " + s.config_digest + " differs from the current config " + digest_);
  }
  load_parameters(model_, s);
  for (std::size_t i = 0; i < params.size(); ++i) {
    optimizer_.slots()[i].moments.m = s.moment_m[i].value.to(cfg_.model.dtype);
    optimizer_.slots()[i].moments.v = s.moment_v[i].value.to(cfg_.model.dtype);
  }
  optimizer_.set_steps(s.optimizer_steps);
  step_ = s.step;
  log_ = s.history;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossEntry>& log, const std::string& digest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  if (!digest.empty()) os << "# digest=" << digest << "\n";
  os << "step,lr,loss\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g\n", static_cast<long long>(e.step), e.lr, e.loss);
    os << buf;
  }
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

PretrainResult pretrain_run(const PretrainConfig& cfg, const SceneManifest& manifest, const std::filesystem::path& out,
                            const std::string& config_digest, const std::string& config_json,
                            const std::optional<std::filesystem::path>& resume) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + out.string() + ": " + ec.message());
  Pretrainer trainer(cfg, manifest, config_digest, config_json);
  if (resume) trainer.restore(load_checkpoint(*resume));
  const std::int64_t every = trainer.config().checkpoint_every;
  while (!trainer.done()) {
    trainer.step();
    if (every > 0 && trainer.next_step() % every == 0 && !trainer.done()) {
      save_checkpoint(out / ("checkpoint-step" + std::to_string(trainer.next_step())), trainer.checkpoint_state());
    }
  }
  PretrainResult r;
  r.log = trainer.log();
  r.epoch_means = trainer.epoch_means();
  r.checkpoint = out / "checkpoint";
  save_checkpoint(r.checkpoint, trainer.checkpoint_state());
  write_loss_csv(out / "loss.csv", r.log, config_digest);

  std::ofstream os(out / "epoch_loss.csv", std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot write epoch_loss.csv");
  if (!config_digest.empty()) os << "# digest=" << config_digest << "\n";
  os << "epoch,mean_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < r.epoch_means.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, r.epoch_means[i]);
    os << buf;
  }
  return r;
}

}  // namespace fgmae
