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

#include "fgmae/eval/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "fgmae/core/error.hpp"
#include "fgmae/data/augment.hpp"
#include "fgmae/data/fgmr.hpp"
#include "fgmae/eval/metrics.hpp"
#include "fgmae/model/masking.hpp"
#include "fgmae/model/patchify.hpp"
#include "fgmae/tensor/ops.hpp"
#include "fgmae/tensor/optim.hpp"

namespace fgmae {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_encoder_param(const std::string& name) {
  return name.rfind("patch_embed.", 0) == 0 || name.rfind("encoder.", 0) == 0;
}

std::vector<std::vector<std::int64_t>> minibatches(const std::vector<std::int64_t>& items, std::int64_t batch, Rng& rng) {
  const auto perm = rng.permutation(static_cast<std::int64_t>(items.size()));
  std::vector<std::vector<std::int64_t>> out;
  for (std::size_t start = 0; start < perm.size(); start += static_cast<std::size_t>(batch)) {
    std::vector<std::int64_t> b;
    for (std::size_t i = start; i < std::min(perm.size(), start + static_cast<std::size_t>(batch)); ++i) {
      b.push_back(items[static_cast<std::size_t>(perm[i])]);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::int64_t> iota_rows(std::int64_t n) {
  std::vector<std::int64_t> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), std::int64_t{0});
  return v;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& v, const std::vector<std::int64_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

char* fmt(char* buf, std::size_t n, double v) {
  std::snprintf(buf, n, "%.17g", v);
  return buf;
}

}  // namespace

const char* task_name(TaskKind t) noexcept { return t == TaskKind::MultiLabel ? "multilabel" : "singlelabel"; }

TaskKind parse_task(const std::string& s) {
  if (s == "multilabel") return TaskKind::MultiLabel;
  if (s == "singlelabel") return TaskKind::SingleLabel;
  fail(ErrorKind::Config, "unknown task '" + s + "' (expected multilabel or singlelabel)");
}

ProbeConfig ProbeConfig::fine_tune_defaults() {
  ProbeConfig c;
  c.epochs = 30;
  c.batch = 16;
  c.lr = 1e-3;
  c.weight_decay = 0.05;
  c.warmup_epochs = 3;
  return c;
}

void ProbeConfig::validate() const {
  require(epochs >= 1 && batch >= 1, ErrorKind::Config, "probe epochs and batch must be >= 1");
  require(lr > 0.0 && weight_decay >= 0.0, ErrorKind::Config, "probe lr must be positive and weight decay non-negative");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::Config, "momentum must lie in [0, 1)");
  require(layer_decay > 0.0 && layer_decay <= 1.0, ErrorKind::Config, "layer decay must lie in (0, 1]");
  require(mixup_alpha >= 0.0, ErrorKind::Config, "mixup alpha must be non-negative");
  require(clip_norm >= 0.0, ErrorKind::Config, "clip norm must be non-negative");
  require(label_smoothing >= 0.0 && label_smoothing < 1.0, ErrorKind::Config, "label smoothing must lie in [0, 1)");
  require(warmup_epochs >= 0 && warmup_epochs <= epochs, ErrorKind::Config, "warmup epochs must lie in [0, epochs]");
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorKind::Config, "train fraction must lie in (0, 1)");
  require(num_classes >= 0, ErrorKind::Config, "num_classes must be non-negative");
}

MetricsReport::MetricsReport() : oa(kNaN), aa(kNaN), map(kNaN), f1(kNaN), miou(kNaN) {}

double MetricsReport::primary() const { return task == "multilabel" ? map : oa; }
const char* MetricsReport::primary_name() const { return task == "multilabel" ? "map" : "oa"; }

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& r, const std::string& digest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  if (!digest.empty()) os << "# digest=" << digest << "\n";
  os << "metric,value\n";
  char buf[64];
  const std::pair<const char*, double> rows[] = {{"oa", r.oa}, {"aa", r.aa}, {"map", r.map}, {"f1", r.f1}, {"miou", r.miou}};
  for (const auto& [name, v] : rows) {
    if (!std::isnan(v)) os << name << "," << fmt(buf, sizeof(buf), v) << "\n";
  }
  os << "train_samples," << r.train_samples << "\ntest_samples," << r.test_samples << "\n";
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

void write_per_class_csv(const std::filesystem::path& path, const MetricsReport& r, const std::string& digest) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  if (!digest.empty()) os << "# digest=" << digest << "\n";
  os << "class,ap,f1,recall,iou\n";
  char a[64], b[64], c[64], d[64];
  for (const auto& m : r.per_class) {
    os << m.cls << "," << fmt(a, 64, m.ap) << "," << fmt(b, 64, m.f1) << "," << fmt(c, 64, m.recall) << ","
       << fmt(d, 64, m.iou) << "\n";
  }
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

Tensor take_rows(const Tensor& t, const std::vector<std::int64_t>& rows) {
  require(t.rank() >= 1, ErrorKind::Shape, "take_rows needs a tensor of rank >= 1");
  const std::int64_t row = t.numel() / std::max<std::int64_t>(t.dim(0), 1);
  const auto v = t.to_vector();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(row) * rows.size());
  for (auto r : rows) {
    require(r >= 0 && r < t.dim(0), ErrorKind::InvalidArgument, "row index out of range");
    out.insert(out.end(), v.begin() + r * row, v.begin() + (r + 1) * row);
  }
  Shape s = t.shape();
  s[0] = static_cast<std::int64_t>(rows.size());
  return Tensor::from_values(s, out, t.dtype());
}

LabeledSet load_labeled_set(const SceneManifest& manifest, const ModelConfig& model, TaskKind task, int num_classes) {
  require(!manifest.entries().empty(), ErrorKind::Config, "labeled manifest is empty");
  LabeledSet set;
  std::vector<Tensor> views;
  int max_label = -1;
  for (const auto& e : manifest.entries()) {
    require(!e.label.empty(), ErrorKind::Config, "scene " + e.path + " has no label");
    Tensor img = read_tensor(manifest.resolve(e));
    require(img.rank() == 3, ErrorKind::Geometry, "scene " + e.path + " is not C x H x W");
    require(img.dim(0) <= model.in_channels, ErrorKind::Geometry,
            "scene " + e.path + " has " + std::to_string(img.dim(0)) + " channels; the encoder takes " +
                std::to_string(model.in_channels) + " and padding cannot shrink");
    if (img.dim(1) != model.image_size || img.dim(2) != model.image_size) {
      img = resize_bilinear(img, model.image_size, model.image_size);
    }
    views.push_back(img.dim(0) == model.in_channels ? img : zero_pad_channels(img, model.in_channels));
    std::vector<int> lab = task == TaskKind::MultiLabel ? parse_multi_label(e.label)
                                                        : std::vector<int>{parse_single_label(e.label)};
    for (int c : lab) max_label = std::max(max_label, c);
    set.labels.push_back(std::move(lab));
    set.locations.push_back(e.location_id);
  }
  set.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  require(set.num_classes >= 2, ErrorKind::Config, "classification needs at least two classes");
  require(max_label < set.num_classes, ErrorKind::Config, "label " + std::to_string(max_label) + " exceeds num_classes");
  std::vector<double> px;
  for (const auto& v : views) {
    const auto x = v.to_vector();
    px.insert(px.end(), x.begin(), x.end());
  }
  set.images = Tensor::from_values({static_cast<std::int64_t>(views.size()), model.in_channels, model.image_size,
                                    model.image_size},
                                   px, model.dtype);
  return set;
}

Split split_by_location(const std::vector<std::string>& sample_locations, double train_fraction, Rng rng) {
  std::vector<std::string> unique;
  for (const auto& l : sample_locations) {
    if (std::find(unique.begin(), unique.end(), l) == unique.end()) unique.push_back(l);
  }
  require(unique.size() >= 2, ErrorKind::Config, "a location split needs at least two locations");
  const auto n = static_cast<std::int64_t>(unique.size());
  const std::int64_t n_train = std::clamp<std::int64_t>(std::llround(train_fraction * static_cast<double>(n)), 1, n - 1);
  const auto perm = rng.permutation(n);
  std::map<std::string, bool> is_train;
  for (std::int64_t i = 0; i < n; ++i) is_train[unique[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]] = i < n_train;
  Split s;
  for (std::size_t i = 0; i < sample_locations.size(); ++i) {
    (is_train[sample_locations[i]] ? s.train : s.test).push_back(static_cast<std::int64_t>(i));
  }
  return s;
}

Tensor encode_pooled(const FgMaeModel& model, const Tensor& images, std::int64_t batch) {
  const std::int64_t n = images.dim(0);
  std::vector<double> out;
  std::int64_t width = 0;
  for (std::int64_t start = 0; start < n; start += batch) {
    std::vector<std::int64_t> rows(static_cast<std::size_t>(std::min(batch, n - start)));
    std::iota(rows.begin(), rows.end(), start);
    Tape tape(false);
    Bound p = model.bind(tape, false);
    const Tensor pooled =
        model.pooled_features(p, tape.constant(patchify(take_rows(images, rows), model.config().patch))).value();
    width = pooled.dim(1);
    const auto v = pooled.to_vector();
    out.insert(out.end(), v.begin(), v.end());
  }
  return Tensor::from_values({n, width}, out, Dtype::F64);
}

Tensor LinearClassifier::logits(const Tensor& features) const {
  const std::int64_t n = features.dim(0), d = features.dim(1);
  auto x = features.to_vector();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) {
      auto& v = x[static_cast<std::size_t>(i * d + j)];
      v = (v - mean[static_cast<std::size_t>(j)]) * inv_std[static_cast<std::size_t>(j)];
    }
  }
  Tape tape(false);
  return ag::linear(tape.constant(Tensor::from_values({n, d}, x, Dtype::F64)), tape.constant(weight), tape.constant(bias))
      .value();
}

LinearClassifier train_linear_classifier(const Tensor& features, const Tensor& targets, TaskKind task,
                                         const ProbeConfig& cfg, Rng rng) {
  require(features.rank() == 2 && targets.rank() == 2 && features.dim(0) == targets.dim(0), ErrorKind::Shape,
          "classifier expects N x D features and N x K targets");
  const std::int64_t n = features.dim(0), d = features.dim(1), k = targets.dim(1);
  LinearClassifier c;
  c.mean.assign(static_cast<std::size_t>(d), 0.0);
  c.inv_std.assign(static_cast<std::size_t>(d), 1.0);
  const auto f = features.to_vector();
  for (std::int64_t j = 0; j < d; ++j) {
    double s = 0.0, s2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += f[static_cast<std::size_t>(i * d + j)];
    const double m = s / static_cast<double>(n);
    for (std::int64_t i = 0; i < n; ++i) {
      const double dv = f[static_cast<std::size_t>(i * d + j)] - m;
      s2 += dv * dv;
    }
    c.mean[static_cast<std::size_t>(j)] = m;
    c.inv_std[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(s2 / static_cast<double>(n) + 1e-12);
  }
  std::vector<double> z(f.size());
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) {
      const auto at = static_cast<std::size_t>(i * d + j);
      z[at] = (f[at] - c.mean[static_cast<std::size_t>(j)]) * c.inv_std[static_cast<std::size_t>(j)];
    }
  }
  const Tensor zs = Tensor::from_values({n, d}, z, Dtype::F64);
  const Tensor ys = targets.to(Dtype::F64);
  c.weight = Tensor::zeros({d, k}, Dtype::F64);
  c.bias = Tensor::zeros({k}, Dtype::F64);

  Sgd sgd(cfg.momentum, cfg.weight_decay);
  sgd.add_slot(c.weight);
  sgd.add_slot(c.bias);
  const auto all = iota_rows(n);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng er = rng.split(static_cast<std::uint64_t>(epoch));
    for (const auto& rows : minibatches(all, cfg.batch, er)) {
      Tape tape;
      Var w = tape.leaf(c.weight), b = tape.leaf(c.bias);
      Var logits = ag::linear(tape.constant(take_rows(zs, rows)), w, b);
      Var y = tape.constant(take_rows(ys, rows));
      Var loss = task == TaskKind::MultiLabel ? ag::bce_with_logits(logits, y) : ag::soft_cross_entropy(logits, y);
      tape.backward(loss);
      Tensor params[] = {std::move(c.weight), std::move(c.bias)};
      const Tensor grads[] = {tape.grad(w), tape.grad(b)};
      sgd.step(params, grads, cfg.lr);
      c.weight = std::move(params[0]);
      c.bias = std::move(params[1]);
    }
  }
  return c;
}

Tensor label_matrix(const std::vector<std::vector<int>>& labels, int num_classes) {
  const auto n = static_cast<std::int64_t>(labels.size());
  std::vector<double> v(static_cast<std::size_t>(n * num_classes), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c : labels[static_cast<std::size_t>(i)]) {
      require(c >= 0 && c < num_classes, ErrorKind::InvalidArgument, "label outside [0, num_classes)");
      v[static_cast<std::size_t>(i * num_classes + c)] = 1.0;
    }
  }
  return Tensor::from_values({n, num_classes}, v, Dtype::F64);
}

MetricsReport score_predictions(const Tensor& logits, const std::vector<std::vector<int>>& labels, TaskKind task,
                                int num_classes) {
  MetricsReport r;
  r.task = task_name(task);
  r.num_classes = num_classes;
  r.test_samples = logits.dim(0);
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  const auto z = logits.to_vector();
  if (task == TaskKind::MultiLabel) {
    std::vector<double> prob(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) prob[i] = 1.0 / (1.0 + std::exp(-z[i]));
    const Tensor scores = Tensor::from_values({n, k}, prob, Dtype::F64);
    const Tensor y = label_matrix(labels, num_classes);
    const ApReport ap = metric_map(scores, y);
    const F1Report f1 = metric_f1(threshold(scores, 0.5), y);
    r.map = ap.map;
    r.f1 = f1.macro;
    for (int c = 0; c < num_classes; ++c) {
      ClassMetric m;
      m.cls = c;
      m.ap = ap.per_class[static_cast<std::size_t>(c)];
      m.f1 = f1.per_class[static_cast<std::size_t>(c)];
      m.recall = kNaN;
      m.iou = kNaN;
      r.per_class.push_back(m);
    }
    return r;
  }
  std::vector<int> pred, truth;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto row = z.begin() + i * k;
    pred.push_back(static_cast<int>(std::max_element(row, row + k) - row));
    truth.push_back(labels[static_cast<std::size_t>(i)].at(0));
  }
  const AccuracyReport acc = metric_oa_aa(pred, truth);
  r.oa = acc.oa;
  r.aa = acc.aa;
  for (int c = 0; c < num_classes; ++c) {
    ClassMetric m;
    m.cls = c;
    m.ap = kNaN;
    m.f1 = kNaN;
    m.recall = static_cast<std::size_t>(c) < acc.per_class.size() ? acc.per_class[static_cast<std::size_t>(c)] : kNaN;
    m.iou = kNaN;
    r.per_class.push_back(m);
  }
  return r;
}

std::string encoder_digest(const FgMaeModel& model) {
  return model.params().digest_prefix("patch_embed.") + model.params().digest_prefix("encoder.");
}

TransferResult linear_probe_train(const FgMaeModel& model, const SceneManifest& manifest, const ProbeConfig& cfg) {
  cfg.validate();
  TransferResult out;
  out.encoder_digest_before = encoder_digest(model);
  const LabeledSet set = load_labeled_set(manifest, model.config(), cfg.task, cfg.num_classes);
  const Split split = split_by_location(set.locations, cfg.train_fraction, Rng(cfg.seed).split("split"));
  const Tensor feats = encode_pooled(model, set.images);
  const LinearClassifier clf =
      train_linear_classifier(take_rows(feats, split.train), label_matrix(pick(set.labels, split.train), set.num_classes),
                              cfg.task, cfg, Rng(cfg.seed).split("probe"));
  out.report = score_predictions(clf.logits(take_rows(feats, split.test)), pick(set.labels, split.test), cfg.task,
                                 set.num_classes);
  out.report.train_samples = static_cast<std::int64_t>(split.train.size());
  out.encoder_digest_after = encoder_digest(model);
  return out;
}

std::vector<double> fine_tune_lr_scales(const FgMaeModel& model, double layer_decay) {
  std::vector<double> s;
  for (const auto& p : model.params().all()) s.push_back(layer_decay_scale(p.layer, model.config().enc_depth, layer_decay));
  return s;
}

TransferResult fine_tune(FgMaeModel& model, const SceneManifest& manifest, const ProbeConfig& cfg) {
  cfg.validate();
  TransferResult out;
  out.encoder_digest_before = encoder_digest(model);
  const ModelConfig& mc = model.config();
  const LabeledSet set = load_labeled_set(manifest, mc, cfg.task, cfg.num_classes);
  const Split split = split_by_location(set.locations, cfg.train_fraction, Rng(cfg.seed).split("split"));
  const Tensor y_all = label_matrix(set.labels, set.num_classes).to(mc.dtype);
  const std::int64_t k = set.num_classes;

  Rng root = Rng(cfg.seed).split("finetune");
  Rng head_rng = root.split("head");
  std::vector<double> hw(static_cast<std::size_t>(mc.enc_dim * k));
  for (double& v : hw) v = head_rng.truncated_normal(0.02);
  Tensor head_w = Tensor::from_values({mc.enc_dim, k}, hw, mc.dtype);
  Tensor head_b = Tensor::zeros({k}, mc.dtype);

  std::vector<std::size_t> trainable;
  AdamW opt(AdamWHyper{0.9, 0.999, 1e-8, cfg.weight_decay});
  const auto scales = fine_tune_lr_scales(model, cfg.layer_decay);
  const auto& all = model.params().all();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!is_encoder_param(all[i].name)) continue;
    trainable.push_back(i);
    opt.add_slot(all[i].value, all[i].decay, scales[i]);
  }
  opt.add_slot(head_w, true, 1.0);
  opt.add_slot(head_b, false, 1.0);

  const std::int64_t per_epoch = (static_cast<std::int64_t>(split.train.size()) + cfg.batch - 1) / cfg.batch;
  LrSchedule sched;
  sched.base_lr = cfg.lr;
  sched.total_steps = per_epoch * cfg.epochs;
  sched.warmup_steps = per_epoch * cfg.warmup_epochs;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng er = root.split("order").split(static_cast<std::uint64_t>(epoch));
    for (const auto& rows : minibatches(split.train, cfg.batch, er)) {
      Tensor images = take_rows(set.images, rows);
      Tensor targets = take_rows(y_all, rows);
      if (cfg.mixup_alpha > 0.0) {
        Rng mr = root.split("mixup").split(static_cast<std::uint64_t>(step));
        MixupBatch mb = mixup(images, targets, cfg.mixup_alpha, mr);
        images = std::move(mb.images);
        targets = std::move(mb.labels);
      }
      if (cfg.label_smoothing > 0.0) {
        // Single-label mass spreads over K classes, multi-label over {0, 1}.
        const double eps = cfg.label_smoothing;
        const double floor = eps / (cfg.task == TaskKind::MultiLabel ? 2.0 : static_cast<double>(set.num_classes));
        std::vector<double> t = targets.to_vector();
        for (double& v : t) v = (1.0 - eps) * v + floor;
        targets = Tensor::from_values(targets.shape(), t, targets.dtype());
      }
      Tape tape;
      Bound p = model.bind(tape, true);
      Var w = tape.leaf(head_w), b = tape.leaf(head_b);
      Var logits = ag::linear(model.pooled_features(p, tape.constant(patchify(images, mc.patch))), w, b);
      Var y = tape.constant(targets);
      Var loss = cfg.task == TaskKind::MultiLabel ? ag::bce_with_logits(logits, y) : ag::soft_cross_entropy(logits, y);
      tape.backward(loss);

      std::vector<Tensor> params, grads;
      for (std::size_t i : trainable) {
        grads.push_back(tape.grad(p.vars[i]));
        params.push_back(std::move(model.params()[i].value));
      }
      grads.push_back(tape.grad(w));
      grads.push_back(tape.grad(b));
      params.push_back(std::move(head_w));
      params.push_back(std::move(head_b));
      if (!std::isfinite(global_grad_norm(grads))) {
        fail(ErrorKind::NonFinite, "non-finite fine-tune gradient at step " + std::to_string(step));
      }
      if (cfg.clip_norm > 0.0) clip_grad_norm(grads, cfg.clip_norm);
      opt.step(params, grads, lr_at(step, sched));
      for (std::size_t j = 0; j < trainable.size(); ++j) model.params()[trainable[j]].value = std::move(params[j]);
      head_w = std::move(params[trainable.size()]);
      head_b = std::move(params[trainable.size() + 1]);
      ++step;
    }
  }

  const Tensor feats = encode_pooled(model, take_rows(set.images, split.test));
  Tape tape(false);
  const Tensor logits =
      ag::linear(tape.constant(feats.to(mc.dtype)), tape.constant(head_w), tape.constant(head_b)).value();
  out.report = score_predictions(logits, pick(set.labels, split.test), cfg.task, set.num_classes);
  out.report.train_samples = static_cast<std::int64_t>(split.train.size());
  out.encoder_digest_after = encoder_digest(model);
  return out;
}

namespace {

// Nearest-neighbour resample of an H x W class map to size x size.
std::vector<int> resize_mask(const Tensor& mask, std::int64_t size) {
  require(mask.rank() == 2, ErrorKind::Geometry, "masks must be H x W");
  const std::int64_t h = mask.dim(0), w = mask.dim(1);
  const auto v = mask.to_vector();
  std::vector<int> out(static_cast<std::size_t>(size * size));
  for (std::int64_t y = 0; y < size; ++y) {
    const std::int64_t sy = std::min(h - 1, (2 * y + 1) * h / (2 * size));
    for (std::int64_t x = 0; x < size; ++x) {
      const std::int64_t sx = std::min(w - 1, (2 * x + 1) * w / (2 * size));
      out[static_cast<std::size_t>(y * size + x)] = static_cast<int>(std::lround(v[static_cast<std::size_t>(sy * w + sx)]));
    }
  }
  return out;
}

// Lowest class id wins ties.
int majority(const std::vector<int>& mask, std::int64_t size, std::int64_t r, std::int64_t c, std::int64_t patch,
             int n_classes) {
  std::vector<int> count(static_cast<std::size_t>(n_classes), 0);
  for (std::int64_t y = r * patch; y < (r + 1) * patch; ++y) {
    for (std::int64_t x = c * patch; x < (c + 1) * patch; ++x) ++count[static_cast<std::size_t>(mask[static_cast<std::size_t>(y * size + x)])];
  }
  return static_cast<int>(std::max_element(count.begin(), count.end()) - count.begin());
}

}  // namespace

TransferResult segmentation_probe(const FgMaeModel& model, const SceneManifest& manifest, const ProbeConfig& cfg) {
  cfg.validate();
  TransferResult out;
  out.encoder_digest_before = encoder_digest(model);
  const ModelConfig& mc = model.config();
  const std::int64_t size = mc.image_size, patch = mc.patch;
  const PatchGrid grid = patch_grid(size, size, patch);

  SceneManifest first(manifest.base_dir());
  for (const auto& loc : manifest.locations()) first.add(*manifest.scenes_at(loc).front());
  std::vector<std::vector<int>> masks;
  int max_class = -1;
  for (const auto& loc : first.locations()) {
    const Tensor m = read_tensor(manifest.base_dir() / "masks" / (loc + ".fgmr"));
    masks.push_back(resize_mask(m.rank() == 3 ? m.reshape({m.dim(1), m.dim(2)}) : m, size));
    for (int v : masks.back()) max_class = std::max(max_class, v);
  }
  const int n_classes = cfg.num_classes > 0 ? cfg.num_classes : max_class + 1;
  require(n_classes >= 2 && max_class < n_classes, ErrorKind::Config, "segmentation masks need >= 2 classes within num_classes");

  // Labels are only needed for the split; the images come from the same loader.
  SceneManifest unlabeled(first.base_dir());
  for (auto e : first.entries()) {
    e.label = "0";
    unlabeled.add(e);
  }
  const LabeledSet set = load_labeled_set(unlabeled, mc, TaskKind::SingleLabel, 2);
  const Split split = split_by_location(set.locations, cfg.train_fraction, Rng(cfg.seed).split("split"));

  // Encoder tokens, one row per patch.
  const std::int64_t n = set.images.dim(0), l = grid.count();
  std::vector<double> tokens;
  std::int64_t d = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    Tape tape(false);
    Bound p = model.bind(tape, false);
    const Tensor enc =
        model.encode(p, tape.constant(patchify(take_rows(set.images, {i}), patch)), identity_plan(1, l)).value();
    d = enc.dim(2);
    const auto v = enc.to_vector();
    tokens.insert(tokens.end(), v.begin(), v.end());
  }
  const Tensor token_rows = Tensor::from_values({n * l, d}, tokens, Dtype::F64);

  auto patch_rows = [&](const std::vector<std::int64_t>& samples) {
    std::vector<std::int64_t> rows;
    std::vector<std::vector<int>> labels;
    for (auto s : samples) {
      for (std::int64_t j = 0; j < l; ++j) {
        rows.push_back(s * l + j);
        labels.push_back({majority(masks[static_cast<std::size_t>(s)], size, j / grid.cols, j % grid.cols, patch, n_classes)});
      }
    }
    return std::make_pair(rows, labels);
  };
  const auto [train_rows, train_labels] = patch_rows(split.train);
  const LinearClassifier clf = train_linear_classifier(take_rows(token_rows, train_rows), label_matrix(train_labels, n_classes),
                                                       TaskKind::SingleLabel, cfg, Rng(cfg.seed).split("probe"));

  std::vector<int> pred_px, true_px;
  for (auto s : split.test) {
    std::vector<std::int64_t> rows(static_cast<std::size_t>(l));
    std::iota(rows.begin(), rows.end(), s * l);
    const auto z = clf.logits(take_rows(token_rows, rows)).to_vector();
    for (std::int64_t y = 0; y < size; ++y) {
      for (std::int64_t x = 0; x < size; ++x) {
        const std::int64_t j = (y / patch) * grid.cols + x / patch;
        const auto row = z.begin() + j * n_classes;
        pred_px.push_back(static_cast<int>(std::max_element(row, row + n_classes) - row));
        true_px.push_back(masks[static_cast<std::size_t>(s)][static_cast<std::size_t>(y * size + x)]);
      }
    }
  }
  const SegmentationReport seg = metric_miou(pred_px, true_px, n_classes, -1);
  MetricsReport& r = out.report;
  r.task = "segmentation";
  r.num_classes = n_classes;
  r.train_samples = static_cast<std::int64_t>(split.train.size());
  r.test_samples = static_cast<std::int64_t>(split.test.size());
  r.oa = seg.oa;
  r.aa = seg.aa;
  r.miou = seg.miou;
  for (int c = 0; c < n_classes; ++c) {
    ClassMetric m;
    m.cls = c;
    m.ap = kNaN;
    m.f1 = kNaN;
    m.recall = kNaN;
    m.iou = seg.iou[static_cast<std::size_t>(c)];
    r.per_class.push_back(m);
  }
  out.encoder_digest_after = encoder_digest(model);
  return out;
}

}  // namespace fgmae
