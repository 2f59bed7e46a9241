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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "fgmae/core/error.hpp"
#include "fgmae/data/synth.hpp"
#include "fgmae/eval/ablation.hpp"
#include "fgmae/eval/metrics.hpp"
#include "fgmae/eval/transfer.hpp"
#include "oracles/metric_oracles.hpp"
#include "oracles/test_util.hpp"
#include "oracles/tiny_model.hpp"

namespace fgmae {
namespace {

using testing::ScratchDir;
using testing::tiny_config;

Tensor matrix(const std::vector<std::vector<int>>& rows) {
  std::vector<double> v;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return Tensor::from_values({static_cast<std::int64_t>(rows.size()), static_cast<std::int64_t>(rows[0].size())}, v,
                             Dtype::F64);
}

Tensor column(const std::vector<double>& v) {
  return Tensor::from_values({static_cast<std::int64_t>(v.size()), 1}, v, Dtype::F64);
}

TEST(Metrics, HandCountedAveragePrecision) {
  EXPECT_DOUBLE_EQ(metric_map(column({0.9, 0.4, 0.2}), column({1, 0, 1})).map, (1.0 + 2.0 / 3.0) / 2.0);
  EXPECT_NEAR(metric_map(column({0.9, 0.4, 0.2}), column({1, 0, 1})).map, 0.8333, 5e-5);
  EXPECT_EQ(metric_map(column({0.9, 0.8, 0.1}), column({1, 1, 0})).map, 1.0);
  // One positive ranked last among n.
  EXPECT_DOUBLE_EQ(metric_map(column({0.1, 0.2, 0.3, 0.4, 0.5}), column({1, 0, 0, 0, 0})).map, 1.0 / 5.0);
  // Ties resolve by ascending index.
  EXPECT_DOUBLE_EQ(metric_map(column({0.5, 0.5}), column({0, 1})).map, 0.5);
  EXPECT_DOUBLE_EQ(metric_map(column({0.5, 0.5}), column({1, 0})).map, 1.0);
}

TEST(Metrics, ClassesWithoutPositivesAreExcluded) {
  const ApReport r = metric_map(matrix({{9, 1}, {1, 2}}), matrix({{1, 0}, {0, 0}}));
  EXPECT_EQ(r.excluded, std::vector<int>{1});
  EXPECT_TRUE(std::isnan(r.per_class[1]));
  EXPECT_EQ(r.map, 1.0);
  EXPECT_THROW(metric_map(matrix({{1, 2}}), matrix({{0, 0}})), Error);
}

TEST(Metrics, HandCountedF1) {
  const Tensor y = matrix({{1, 0}, {0, 1}, {1, 1}});
  EXPECT_EQ(metric_f1(y, y).macro, 1.0);
  EXPECT_EQ(metric_f1(matrix({{0, 0}, {0, 0}, {0, 0}}), y).macro, 0.0);
  // TP=1, FP=1, FN=1.
  EXPECT_DOUBLE_EQ(metric_f1(column({1, 1, 0}), column({1, 0, 1})).macro, 0.5);
  EXPECT_EQ(threshold(column({0.5, 0.49})).to_vector(), (std::vector<double>{1.0, 0.0}));
}

TEST(Metrics, HandCountedOverallAndAverageAccuracy) {
  const AccuracyReport all = metric_oa_aa({0, 1, 2}, {0, 1, 2});
  EXPECT_EQ(all.oa, 1.0);
  EXPECT_EQ(all.aa, 1.0);
  // Class 0: 3 of 4 right; class 1: 1 of 2 right.
  const AccuracyReport r = metric_oa_aa({0, 0, 0, 1, 1, 0}, {0, 0, 0, 0, 1, 1});
  EXPECT_DOUBLE_EQ(r.oa, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.aa, 0.625);
  // Same per-class recalls with doubled class 1.
  const AccuracyReport re = metric_oa_aa({0, 0, 0, 1, 1, 0, 1, 0}, {0, 0, 0, 0, 1, 1, 1, 1});
  EXPECT_DOUBLE_EQ(re.aa, r.aa);
  EXPECT_THROW(metric_oa_aa({}, {}), Error);
}

TEST(Metrics, HandCountedMiou) {
  const SegmentationReport same = metric_miou({0, 1, 1, 0}, {0, 1, 1, 0}, 2);
  EXPECT_EQ(same.miou, 1.0);
  const SegmentationReport r = metric_miou({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(r.iou[0], 0.5);
  EXPECT_DOUBLE_EQ(r.iou[1], 2.0 / 3.0);
  EXPECT_NEAR(r.miou, 7.0 / 12.0, 1e-15);
  // Relabeling both masks by 0 <-> 1 leaves mIoU unchanged.
  EXPECT_NEAR(metric_miou({1, 1, 0, 0}, {1, 0, 0, 0}, 2).miou, r.miou, 1e-15);
  // ignore_index drops pixels on either side.
  EXPECT_EQ(metric_miou({0, 0, 1, 1}, {0, 255, 1, 1}, 2, 255).miou, 1.0);
  EXPECT_THROW(metric_miou({255}, {255}, 2, 255), Error);
  EXPECT_THROW(metric_miou({3}, {0}, 2), Error);
}

TEST(Metrics, MatchBruteForceOnRandomInstances) {
  Rng rng(2024);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_int(20)), k = 1 + static_cast<int>(rng.uniform_int(4));
    std::vector<double> s;
    std::vector<std::vector<int>> y(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(k)));
    std::vector<std::vector<int>> pr = y;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) {
        s.push_back(static_cast<double>(rng.uniform_int(5)) / 4.0);  // coarse grid forces ties
        y[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = static_cast<int>(rng.uniform_int(2));
        pr[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = static_cast<int>(rng.uniform_int(2));
      }
    }
    const Tensor scores = Tensor::from_values({n, k}, s, Dtype::F64);
    double expect_sum = 0.0;
    int counted = 0;
    for (int c = 0; c < k; ++c) {
      std::vector<double> sc;
      std::vector<int> yc;
      for (int i = 0; i < n; ++i) {
        sc.push_back(s[static_cast<std::size_t>(i * k + c)]);
        yc.push_back(y[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
      }
      if (std::count(yc.begin(), yc.end(), 1) == 0) continue;
      expect_sum += oracle::average_precision(sc, yc);
      ++counted;
    }
    if (counted > 0) EXPECT_EQ(metric_map(scores, matrix(y)).map, expect_sum / counted) << t;
    EXPECT_EQ(metric_f1(matrix(pr), matrix(y)).macro, oracle::macro_f1(pr, y)) << t;

    std::vector<int> pc, yc;
    for (int i = 0; i < n; ++i) {
      pc.push_back(static_cast<int>(rng.uniform_int(k + 1)));
      yc.push_back(static_cast<int>(rng.uniform_int(k + 1)));
    }
    const auto acc = metric_oa_aa(pc, yc);
    const auto want = oracle::oa_aa(pc, yc, k + 1);
    EXPECT_EQ(acc.oa, want.oa) << t;
    EXPECT_EQ(acc.aa, want.aa) << t;

    std::vector<int> pm, ym;
    for (int i = 0; i < n; ++i) {
      pm.push_back(rng.uniform_int(6) == 0 ? -1 : static_cast<int>(rng.uniform_int(k + 1)));
      ym.push_back(static_cast<int>(rng.uniform_int(k + 1)));
    }
    if (std::count(pm.begin(), pm.end(), -1) == n) pm[0] = 0;
    EXPECT_EQ(metric_miou(pm, ym, k + 1, -1).miou, oracle::miou(pm, ym, k + 1, -1)) << t;
  }
}

TEST(Metrics, InvariantToSampleOrder) {
  Rng rng(5);
  const int n = 15, k = 3;
  const Tensor s = testing::random_tensor({n, k}, 3, Dtype::F64, 0.0, 1.0);
  std::vector<std::vector<int>> y(n, std::vector<int>(k));
  std::vector<int> pc(n), yc(n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) y[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = static_cast<int>(rng.uniform_int(2));
    y[static_cast<std::size_t>(i)][static_cast<std::size_t>(i % k)] = 1;
    pc[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(k));
    yc[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(k));
  }
  const auto perm = rng.permutation(n);
  const Tensor sp = take_rows(s, perm);
  std::vector<std::vector<int>> yp;
  std::vector<int> pcp, ycp;
  for (auto i : perm) {
    yp.push_back(y[static_cast<std::size_t>(i)]);
    pcp.push_back(pc[static_cast<std::size_t>(i)]);
    ycp.push_back(yc[static_cast<std::size_t>(i)]);
  }
  // Continuous scores carry no ties, so rank order is permutation-free.
  EXPECT_NEAR(metric_map(s, matrix(y)).map, metric_map(sp, matrix(yp)).map, 1e-15);
  EXPECT_EQ(metric_oa_aa(pc, yc).aa, metric_oa_aa(pcp, ycp).aa);
  EXPECT_NEAR(metric_miou(pc, yc, k).miou, metric_miou(pcp, ycp, k).miou, 1e-15);
  EXPECT_EQ(metric_f1(threshold(s), matrix(y)).macro, metric_f1(threshold(sp), matrix(yp)).macro);
}

TEST(Probe, SeparableToyReachesPerfectAccuracy) {
  Rng rng(8);
  std::vector<double> f;
  std::vector<std::vector<int>> labels;
  for (int i = 0; i < 60; ++i) {
    const int c = i % 2;
    f.push_back(rng.normal(c ? 2.0 : -2.0, 0.5));
    f.push_back(rng.normal(0.0, 1.0));
    labels.push_back({c});
  }
  const Tensor feats = Tensor::from_values({60, 2}, f, Dtype::F64);
  ProbeConfig cfg;
  cfg.epochs = 30;
  cfg.batch = 10;
  const auto clf = train_linear_classifier(feats, label_matrix(labels, 2), TaskKind::SingleLabel, cfg, Rng(1));
  EXPECT_EQ(score_predictions(clf.logits(feats), labels, TaskKind::SingleLabel, 2).oa, 1.0);
  const auto ml = train_linear_classifier(feats, label_matrix(labels, 2), TaskKind::MultiLabel, cfg, Rng(1));
  const MetricsReport r = score_predictions(ml.logits(feats), labels, TaskKind::MultiLabel, 2);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.f1, 1.0);
}

TEST(Probe, LocationSplitIsDisjoint) {
  const std::vector<std::string> locs = {"a", "a", "b", "c", "c", "d", "e", "e"};
  const Split s = split_by_location(locs, 0.5, Rng(3));
  std::set<std::string> train, test;
  for (auto i : s.train) train.insert(locs[static_cast<std::size_t>(i)]);
  for (auto i : s.test) test.insert(locs[static_cast<std::size_t>(i)]);
  EXPECT_EQ(s.train.size() + s.test.size(), locs.size());
  for (const auto& l : train) EXPECT_EQ(test.count(l), 0u);
  EXPECT_EQ(train.size(), 3u);  // round(2.5) away from zero
  EXPECT_THROW(split_by_location({"a", "a"}, 0.5, Rng(1)), Error);
}

SceneManifest sar_data(const ScratchDir& dir, int locations) {
  DatasetSpec spec;
  spec.locations = locations;
  spec.size = 40;
  spec.seed = 21;
  return write_synthetic_dataset(dir.path(), spec);
}

TEST(Probe, FreezesTheEncoder) {
  ScratchDir dir("probe_freeze");
  const SceneManifest m = sar_data(dir, 8);
  const FgMaeModel model(tiny_config(), Rng(1));
  ProbeConfig cfg;
  cfg.epochs = 5;
  const TransferResult r = linear_probe_train(model, m, cfg);
  EXPECT_EQ(r.encoder_digest_before, r.encoder_digest_after);
  EXPECT_EQ(r.report.train_samples + r.report.test_samples, 32);
  EXPECT_GE(r.report.oa, 0.0);
  EXPECT_LE(r.report.oa, 1.0);
  EXPECT_LE(r.report.aa, 1.0);
}

TEST(Probe, RejectsInputsWiderThanTheEncoder) {
  ScratchDir dir("probe_wide");
  DatasetSpec spec;
  spec.modality = Modality::MS;
  spec.locations = 2;
  spec.size = 32;
  const SceneManifest m = write_synthetic_dataset(dir.path(), spec);
  const FgMaeModel model(tiny_config(), Rng(1));
  ProbeConfig cfg;
  cfg.task = TaskKind::MultiLabel;
  try {
    linear_probe_train(model, m, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Geometry);
  }
}

TEST(FineTune, LayerDecayScales) {
  ModelConfig c = tiny_config();
  c.enc_depth = 2;
  const FgMaeModel model(c, Rng(1));
  const auto scales = fine_tune_lr_scales(model, 0.75);
  const auto& params = model.params().all();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string& n = params[i].name;
    if (n.rfind("encoder.blocks.1.", 0) == 0) EXPECT_DOUBLE_EQ(scales[i], 0.75) << n;
    if (n.rfind("encoder.blocks.0.", 0) == 0) EXPECT_DOUBLE_EQ(scales[i], 0.5625) << n;
    if (n.rfind("encoder.norm", 0) == 0) EXPECT_EQ(scales[i], 1.0) << n;
    if (n.rfind("patch_embed.", 0) == 0) EXPECT_DOUBLE_EQ(scales[i], 0.421875) << n;
  }
  for (double s : fine_tune_lr_scales(model, 1.0)) EXPECT_EQ(s, 1.0);
}

TEST(FineTune, UpdatesEveryEncoderBlockAndNoDecoderParameter) {
  ScratchDir dir("finetune");
  const SceneManifest m = sar_data(dir, 6);
  ModelConfig c = tiny_config();
  c.enc_depth = 2;
  FgMaeModel model(c, Rng(1));
  const FgMaeModel before = model;
  ProbeConfig cfg = ProbeConfig::fine_tune_defaults();
  cfg.epochs = 2;
  cfg.warmup_epochs = 1;
  cfg.batch = 4;
  const TransferResult r = fine_tune(model, m, cfg);
  EXPECT_NE(r.encoder_digest_before, r.encoder_digest_after);
  for (const char* prefix : {"patch_embed.", "encoder.blocks.0.", "encoder.blocks.1.", "encoder.norm"}) {
    EXPECT_NE(model.params().digest_prefix(prefix), before.params().digest_prefix(prefix)) << prefix;
  }
  EXPECT_EQ(model.params().digest_prefix("decoder."), before.params().digest_prefix("decoder."));
  EXPECT_GE(r.report.oa, 0.0);
  EXPECT_LE(r.report.oa, 1.0);
}

TEST(FineTune, ClippingAndSmoothingAreOffByDefaultAndChangeTheRun) {
  ScratchDir dir("finetune_flags");
  const SceneManifest m = sar_data(dir, 6);
  ProbeConfig cfg = ProbeConfig::fine_tune_defaults();
  EXPECT_EQ(cfg.clip_norm, 0.0);
  EXPECT_EQ(cfg.label_smoothing, 0.0);
  cfg.epochs = 1;
  cfg.warmup_epochs = 0;
  cfg.batch = 4;
  auto digest_after = [&](const ProbeConfig& pc) {
    FgMaeModel model(tiny_config(), Rng(1));
    return fine_tune(model, m, pc).encoder_digest_after;
  };
  const auto plain = digest_after(cfg);
  EXPECT_EQ(digest_after(cfg), plain);
  ProbeConfig clipped = cfg;
  clipped.clip_norm = 1e-3;
  EXPECT_NE(digest_after(clipped), plain);
  ProbeConfig smoothed = cfg;
  smoothed.label_smoothing = 0.1;
  EXPECT_NE(digest_after(smoothed), plain);
  smoothed.label_smoothing = 1.0;
  EXPECT_THROW(smoothed.validate(), Error);
}

TEST(Segmentation, PatchProbeScoresMasks) {
  ScratchDir dir("seg");
  DatasetSpec spec;
  spec.modality = Modality::MS;
  spec.locations = 6;
  spec.size = 48;
  const SceneManifest m = write_synthetic_dataset(dir.path(), spec);
  ModelConfig c = tiny_config();
  c.in_channels = 13;
  const FgMaeModel model(c, Rng(2));
  ProbeConfig cfg;
  cfg.epochs = 10;
  cfg.num_classes = kMsClasses;
  const TransferResult r = segmentation_probe(model, m, cfg);
  EXPECT_EQ(r.report.task, "segmentation");
  EXPECT_GE(r.report.miou, 0.0);
  EXPECT_LE(r.report.miou, 1.0);
  EXPECT_LE(r.report.oa, 1.0);
  EXPECT_EQ(r.report.per_class.size(), static_cast<std::size_t>(kMsClasses));
  EXPECT_EQ(r.encoder_digest_before, r.encoder_digest_after);
}

TEST(Report, CsvFilesCarryDigest) {
  ScratchDir dir("report");
  MetricsReport r;
  r.task = "singlelabel";
  r.oa = 0.5;
  r.aa = 0.25;
  r.per_class = {{0, NAN, NAN, 0.5, NAN}};
  write_metrics_csv(dir / "m.csv", r, "abc");
  write_per_class_csv(dir / "c.csv", r, "abc");
  std::ifstream is(dir / "m.csv");
  std::string a, b, c;
  std::getline(is, a);
  std::getline(is, b);
  std::getline(is, c);
  EXPECT_EQ(a, "# digest=abc");
  EXPECT_EQ(b, "metric,value");
  EXPECT_EQ(c, "oa,0.5");
}

AblationConfig tiny_ablation() {
  AblationConfig a;
  a.pretrain.model = tiny_config();
  a.pretrain.epochs = 1;
  a.pretrain.warmup_epochs = 0;
  a.pretrain.batch = 4;
  FeatureSpec raw;
  raw.kind = FeatureKind::RawPixels;
  a.specs = {raw, FeatureSpec{}};
  a.seeds = {1, 2, 3};
  a.probe.epochs = 3;
  return a;
}

TEST(Ablation, TableShapeAndDeterminism) {
  ScratchDir dir("ablation");
  const SceneManifest m = sar_data(dir, 4);
  const AblationConfig cfg = tiny_ablation();
  const AblationTable t = feature_ablation_study(cfg, m, m);
  EXPECT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.summary.size(), 2u);
  EXPECT_EQ(t.summary[0].spec, "raw");
  EXPECT_EQ(t.summary[1].spec, "hog");
  EXPECT_EQ(t.rows[0].metric, "oa");
  EXPECT_DOUBLE_EQ(t.mean("hog"), (t.value("hog", 1) + t.value("hog", 2) + t.value("hog", 3)) / 3.0);
  const AblationTable again = feature_ablation_study(cfg, m, m);
  for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_EQ(t.rows[i].value, again.rows[i].value);

  AblationConfig with_rand = cfg;
  with_rand.seeds = {1};
  with_rand.random_init = true;
  const AblationTable r = feature_ablation_study(with_rand, m, m);
  EXPECT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.summary.back().spec, kRandomInitArm);

  write_ablation_csv(dir / "t.csv", t, "d");
  std::ifstream is(dir / "t.csv");
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  EXPECT_EQ(lines, 2 + 8);
}

TEST(Ablation, NeedsTwoSpecs) {
  AblationConfig cfg = tiny_ablation();
  cfg.specs.pop_back();
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(spec_labels({FeatureSpec{}, FeatureSpec{}}), (std::vector<std::string>{"hog", "hog#1"}));
}

}  // namespace
}  // namespace fgmae
