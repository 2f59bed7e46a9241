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

#include "fgmae/tensor/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fgmae {

double lr_at(std::int64_t step, const LrSchedule& s) {
  require(step >= 0 && step <= s.total_steps, ErrorKind::InvalidArgument,
          "lr_at: step " + std::to_string(step) + " outside [0, " +
              std::to_string(s.total_steps) + "]");
  require(s.warmup_steps >= 0 && s.warmup_steps <= s.total_steps, ErrorKind::InvalidArgument,
          "lr_at: warmup longer than schedule");
  if (step < s.warmup_steps) {
    return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  const std::int64_t decay_steps = s.total_steps - s.warmup_steps;
  if (decay_steps == 0) return s.base_lr;
  const double progress =
      static_cast<double>(step - s.warmup_steps) / static_cast<double>(decay_steps);
  return s.min_lr +
         (s.base_lr - s.min_lr) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void adamw_step(Tensor& param, const Tensor& grad, Moments& state, const AdamWHyper& h,
                double lr, double weight_decay, std::int64_t t) {
  require(param.shape() == grad.shape(), ErrorKind::Shape,
          "adamw_step: grad shape " + shape_str(grad.shape()) + " != param " +
              shape_str(param.shape()));
  require(t >= 1, ErrorKind::InvalidArgument, "adamw_step: step count must be >= 1");
  require(grad.all_finite(), ErrorKind::NonFinite, "adamw_step: non-finite gradient");
  if (!state.m.defined()) {
    state.m = Tensor::zeros(param.shape(), param.dtype());
    state.v = Tensor::zeros(param.shape(), param.dtype());
  }
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  const double decay = 1.0 - lr * weight_decay;
  Tensor g = grad.dtype() == param.dtype() ? grad : grad.to(param.dtype());
  visit_dtype(param.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto p = param.mutable_data<T>();
    auto m = state.m.mutable_data<T>();
    auto v = state.v.mutable_data<T>();
    auto gd = g.data<T>();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = gd[i];
      const double mi = h.beta1 * m[i] + (1.0 - h.beta1) * gi;
      const double vi = h.beta2 * v[i] + (1.0 - h.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double mhat = static_cast<double>(m[i]) / bc1;
      const double vhat = static_cast<double>(v[i]) / bc2;
      p[i] = static_cast<T>(static_cast<double>(p[i]) * decay - lr * mhat / (std::sqrt(vhat) + h.eps));
    }
  });
}

std::size_t AdamW::add_slot(const Tensor& like, bool decay, double lr_scale) {
  Slot s;
  s.moments.m = Tensor::zeros(like.shape(), like.dtype());
  s.moments.v = Tensor::zeros(like.shape(), like.dtype());
  s.decay = decay;
  s.lr_scale = lr_scale;
  slots_.push_back(std::move(s));
  return slots_.size() - 1;
}

void AdamW::step(std::span<Tensor> params, std::span<const Tensor> grads, double lr) {
  require(params.size() == slots_.size() && grads.size() == slots_.size(), ErrorKind::Internal,
          "AdamW::step: parameter count does not match optimizer slots");
  ++t_;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    Slot& s = slots_[i];
    adamw_step(params[i], grads[i], s.moments, hyper_, lr * s.lr_scale,
               s.decay ? hyper_.weight_decay : 0.0, t_);
  }
}

std::size_t Sgd::add_slot(const Tensor& like) {
  velocity_.push_back(Tensor::zeros(like.shape(), like.dtype()));
  return velocity_.size() - 1;
}

void Sgd::step(std::span<Tensor> params, std::span<const Tensor> grads, double lr) {
  require(params.size() == velocity_.size() && grads.size() == velocity_.size(),
          ErrorKind::Internal, "Sgd::step: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(grads[i].all_finite(), ErrorKind::NonFinite, "Sgd::step: non-finite gradient");
    Tensor g = grads[i].dtype() == params[i].dtype() ? grads[i] : grads[i].to(params[i].dtype());
    visit_dtype(params[i].dtype(), [&](auto tag) {
      using T = decltype(tag);
      auto p = params[i].mutable_data<T>();
      auto v = velocity_[i].mutable_data<T>();
      auto gd = g.data<T>();
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = gd[j] + weight_decay_ * p[j];
        v[j] = static_cast<T>(momentum_ * v[j] + gj);
        p[j] = static_cast<T>(p[j] - lr * v[j]);
      }
    });
  }
}

double global_grad_norm(std::span<const Tensor> grads) {
  double acc = 0.0;
  for (const Tensor& g : grads) {
    for (double v : g.to_vector()) acc += v * v;
  }
  return std::sqrt(acc);
}

double clip_grad_norm(std::span<Tensor> grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm <= max_norm || norm == 0.0) return norm;
  const double s = max_norm / norm;
  for (Tensor& g : grads) {
    visit_dtype(g.dtype(), [&](auto tag) {
      using T = decltype(tag);
      for (T& v : g.mutable_data<T>()) v = static_cast<T>(v * s);
    });
  }
  return norm;
}

}  // namespace fgmae
