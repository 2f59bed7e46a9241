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

#include <fstream>
#include <set>

#include "fgmae/core/error.hpp"
#include "fgmae/data/synth.hpp"
#include "fgmae/engine/checkpoint.hpp"
#include "fgmae/engine/pretrain.hpp"
#include "fgmae/model/patchify.hpp"
#include "oracles/test_util.hpp"
#include "oracles/tiny_model.hpp"

namespace fgmae {
namespace {

using testing::ScratchDir;
using testing::tiny_config;

PretrainConfig tiny_pretrain(int epochs = 3, int batch = 4) {
  PretrainConfig c;
  c.model = tiny_config(Dtype::F64);
  c.epochs = epochs;
  c.batch = batch;
  c.warmup_epochs = 1;
  c.base_lr = 1e-3;
  c.seed = 11;
  c.finalize();
  return c;
}

SceneManifest tiny_dataset(const ScratchDir& dir, int locations = 8) {
  DatasetSpec spec;
  spec.locations = locations;
  spec.size = 40;
  spec.seed = 3;
  return write_synthetic_dataset(dir.path(), spec);
}

bool same_bits(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.to_vector(), y = b.to_vector();
  return std::equal(x.begin(), x.end(), y.begin());
}

TEST(Checkpoint, RoundTripsEveryField) {
  ScratchDir dir("ckpt_roundtrip");
  CheckpointState s;
  s.step = 7;
  s.optimizer_steps = 7;
  s.config_digest = "abc";
  s.config_json = R"({"seed":1})";
  s.params = {{"w", testing::random_tensor({3, 2}, 1)}, {"b", testing::random_tensor({2}, 2, Dtype::F32)}};
  s.moment_m = {{"w", testing::random_tensor({3, 2}, 3)}, {"b", testing::random_tensor({2}, 4, Dtype::F32)}};
  s.moment_v = {{"w", testing::random_tensor({3, 2}, 5)}, {"b", testing::random_tensor({2}, 6, Dtype::F32)}};
  s.history = {{0, 0.0, 1.0 / 3.0}, {1, 1e-4, 0.1}};
  save_checkpoint(dir / "c", s);
  save_checkpoint(dir / "c", s);  // overwrite in place
  const CheckpointState r = load_checkpoint(dir / "c");
  EXPECT_EQ(r.step, 7);
  EXPECT_EQ(r.config_digest, "abc");
  ASSERT_EQ(r.params.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r.params[i].name, s.params[i].name);
    EXPECT_EQ(r.params[i].value.dtype(), s.params[i].value.dtype());
    EXPECT_TRUE(same_bits(r.params[i].value, s.params[i].value));
    EXPECT_TRUE(same_bits(r.moment_v[i].value, s.moment_v[i].value));
  }
  ASSERT_EQ(r.history.size(), 2u);
  EXPECT_EQ(r.history[0].loss, 1.0 / 3.0);
  EXPECT_FALSE(std::filesystem::exists(dir / "c.tmp"));
}

TEST(Checkpoint, MissingDirectoryIsIoError) {
  try {
    load_checkpoint("/nonexistent/ckpt");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(Pretrain, StepCountIsEpochsTimesCeilBatches) {
  ScratchDir dir("pre_steps");
  const SceneManifest m = tiny_dataset(dir, 7);
  Pretrainer t(tiny_pretrain(3, 4), m);
  EXPECT_EQ(t.steps_per_epoch(), 2);
  t.run_until(1000);
  EXPECT_EQ(t.log().size(), 6u);
  EXPECT_EQ(t.epoch_means().size(), 3u);
  // Last batch of each epoch carries the remainder.
  EXPECT_EQ(t.prepare(1).images.dim(0), 3);
  EXPECT_THROW(t.step(), Error);
}

TEST(Pretrain, LrTraceMatchesSchedule) {
  ScratchDir dir("pre_lr");
  Pretrainer t(tiny_pretrain(3, 4), tiny_dataset(dir));
  t.run_until(6);
  LrSchedule s;
  s.base_lr = 1e-3;
  s.warmup_steps = 2;
  s.total_steps = 6;
  for (const auto& e : t.log()) EXPECT_EQ(e.lr, lr_at(e.step, s)) << e.step;
  EXPECT_EQ(t.log()[0].lr, 0.0);
  EXPECT_EQ(t.log()[2].lr, 1e-3);
}

TEST(Pretrain, RunsAreBitwiseReproducible) {
  ScratchDir dir("pre_repro");
  const SceneManifest m = tiny_dataset(dir);
  Pretrainer a(tiny_pretrain(), m), b(tiny_pretrain(), m);
  a.run_until(6);
  b.run_until(6);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(a.log()[i].loss, b.log()[i].loss);
  EXPECT_EQ(a.model().params().digest(), b.model().params().digest());
  PretrainConfig other = tiny_pretrain();
  other.seed = 12;
  Pretrainer c(other, m);
  c.run_until(6);
  EXPECT_NE(a.model().params().digest(), c.model().params().digest());
}

TEST(Pretrain, ResumeIsTransparent) {
  ScratchDir dir("pre_resume");
  const SceneManifest m = tiny_dataset(dir);
  Pretrainer full(tiny_pretrain(), m);
  full.run_until(6);

  Pretrainer first(tiny_pretrain(), m);
  first.run_until(3);
  save_checkpoint(dir / "ck", first.checkpoint_state());
  Pretrainer second(tiny_pretrain(), m);
  second.restore(load_checkpoint(dir / "ck"));
  EXPECT_EQ(second.next_step(), 3);
  second.run_until(6);
  ASSERT_EQ(second.log().size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(second.log()[i].loss, full.log()[i].loss) << i;
  EXPECT_EQ(second.model().params().digest(), full.model().params().digest());
}

TEST(Pretrain, CheckpointNamesEqualModelParameters) {
  ScratchDir dir("pre_names");
  Pretrainer t(tiny_pretrain(), tiny_dataset(dir));
  save_checkpoint(dir / "ck", t.checkpoint_state());
  const CheckpointState s = load_checkpoint(dir / "ck");
  std::set<std::string> saved, model;
  for (const auto& p : s.params) saved.insert(p.name);
  for (const auto& p : t.model().params().all()) model.insert(p.name);
  EXPECT_EQ(saved, model);
  EXPECT_EQ(saved.size(), s.moment_m.size());
}

TEST(Pretrain, MismatchedArchitectureNamesTheParameter) {
  ScratchDir dir("pre_mismatch");
  const SceneManifest m = tiny_dataset(dir);
  Pretrainer t(tiny_pretrain(), m);
  save_checkpoint(dir / "ck", t.checkpoint_state());
  PretrainConfig wide = tiny_pretrain();
  wide.model.enc_dim = 48;
  Pretrainer u(wide, m);
  try {
    u.restore(load_checkpoint(dir / "ck"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Shape);
    EXPECT_NE(std::string(e.what()).find("patch_embed.weight"), std::string::npos) << e.what();
  }
}

TEST(Pretrain, TargetsComeFromTheAugmentedView) {
  ScratchDir dir("pre_targets");
  Pretrainer t(tiny_pretrain(), tiny_dataset(dir));
  const PreparedBatch b = t.prepare(4);
  EXPECT_EQ(b.images.shape(), (Shape{4, 2, 32, 32}));
  const TargetTensor direct = assemble_targets(b.images, t.config().feature, 8);
  ASSERT_EQ(direct.values.size(), b.targets.values.size());
  EXPECT_TRUE(same_bits(direct.values[0], b.targets.values[0]));
  // Same step, same batch.
  EXPECT_TRUE(same_bits(t.prepare(4).images, b.images));
  EXPECT_FALSE(same_bits(t.prepare(5).images, b.images));
}

TEST(Pretrain, ZeroHeadLossIsMeanSquaredMaskedTarget) {
  ScratchDir dir("pre_zero");
  PretrainConfig c = tiny_pretrain();
  c.model.zero_init_heads = true;
  Pretrainer t(c, tiny_dataset(dir));
  const PreparedBatch b = t.prepare(0);
  const Tensor& y = b.targets.values[0];
  const std::int64_t d = y.dim(2);
  double sum = 0.0;
  for (std::int64_t i = 0; i < b.plan.batch; ++i) {
    for (std::int64_t j = 0; j < b.plan.masked(); ++j) {
      const std::int64_t l = b.plan.ids_mask.at(i, j);
      for (std::int64_t k = 0; k < d; ++k) {
        const double v = y.at({i, l, k});
        sum += v * v;
      }
    }
  }
  const double expected = sum / static_cast<double>(b.plan.batch * b.plan.masked() * d);
  EXPECT_NEAR(t.step().loss, expected, 1e-12 * std::max(1.0, expected));
}

TEST(Pretrain, RunWritesLossFilesAndCheckpoint) {
  ScratchDir dir("pre_run");
  const SceneManifest m = tiny_dataset(dir);
  PretrainConfig c = tiny_pretrain(2, 4);
  c.checkpoint_every = 2;
  const PretrainResult r = pretrain_run(c, m, dir / "out", "d1g35t");
  EXPECT_EQ(r.log.size(), 4u);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "checkpoint" / "index.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "checkpoint-step2" / "index.json"));
  std::ifstream is(dir / "out" / "loss.csv");
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "# digest=d1g35t");
  std::getline(is, line);
  EXPECT_EQ(line, "step,lr,loss");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 4);
  // Resuming a finished run adds no steps.
  const PretrainResult again = pretrain_run(c, m, dir / "out2", "d1g35t", "", dir / "out" / "checkpoint");
  EXPECT_EQ(again.log.size(), 4u);
  EXPECT_EQ(again.log.back().loss, r.log.back().loss);
}

TEST(Pretrain, InvalidConfigIsRejected) {
  ScratchDir dir("pre_invalid");
  const SceneManifest m = tiny_dataset(dir, 2);
  PretrainConfig c = tiny_pretrain();
  c.warmup_epochs = 5;
  EXPECT_THROW(Pretrainer(c, m), Error);
  c = tiny_pretrain();
  c.batch = 0;
  EXPECT_THROW(Pretrainer(c, m), Error);
}

}  // namespace
}  // namespace fgmae
