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
#include <span>
#include <vector>

#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

struct LrSchedule {
  double base_lr = 1.5e-4;
  std::int64_t warmup_steps = 0;
  std::int64_t total_steps = 1;
  double min_lr = 0.0;
};

// Linear warmup from 0 to base_lr over warmup_steps, then half-cosine decay to
// min_lr at total_steps. Valid for 0 <= step <= total_steps.
double lr_at(std::int64_t step, const LrSchedule& schedule);

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

struct Moments {
  Tensor m;
  Tensor v;
};

// One decoupled-weight-decay Adam update at step count t (1-based, already
// incremented). `weight_decay` overrides the hyperparameter so callers can
// exempt norms and tokens. Throws ErrorKind::NonFinite on a non-finite grad.
void adamw_step(Tensor& param, const Tensor& grad, Moments& state, const AdamWHyper& hyper,
                double lr, double weight_decay, std::int64_t t);

class AdamW {
 public:
  struct Slot {
    Moments moments;
    bool decay = true;
    double lr_scale = 1.0;
  };

  explicit AdamW(AdamWHyper hyper = {}) : hyper_(hyper) {}

  std::size_t add_slot(const Tensor& like, bool decay, double lr_scale = 1.0);

  // Increments the step count, then updates every slot.
  void step(std::span<Tensor> params, std::span<const Tensor> grads, double lr);

  const AdamWHyper& hyper() const { return hyper_; }
  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  AdamWHyper hyper_;
  std::int64_t t_ = 0;
  std::vector<Slot> slots_;
};

// Plain SGD with heavy-ball momentum and L2 weight decay folded into the
// gradient.
class Sgd {
 public:
  Sgd(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  std::size_t add_slot(const Tensor& like);
  void step(std::span<Tensor> params, std::span<const Tensor> grads, double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::vector<Tensor> velocity_;
};

double global_grad_norm(std::span<const Tensor> grads);
// Scales grads in place so their global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(std::span<Tensor> grads, double max_norm);

}  // namespace fgmae
