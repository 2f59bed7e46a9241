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

#include "fgmae/model/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fgmae/core/error.hpp"

namespace fgmae {

std::int64_t keep_count(std::int64_t length, double ratio) {
  require(ratio >= 0.0 && ratio < 1.0, ErrorKind::InvalidArgument, "masking ratio must lie in [0, 1)");
  // The guard keeps exact products such as 10 * (1 - 0.9) from rounding down.
  return static_cast<std::int64_t>(std::floor(static_cast<double>(length) * (1.0 - ratio) + 1e-9));
}

namespace {

MaskPlan plan_from_orders(std::int64_t batch, std::int64_t length, std::int64_t keep,
                          const std::vector<std::vector<std::int64_t>>& orders) {
  MaskPlan plan;
  plan.batch = batch;
  plan.length = length;
  plan.ids_keep = {batch, keep, {}};
  plan.ids_mask = {batch, length - keep, {}};
  plan.ids_restore = {batch, length, std::vector<std::int64_t>(static_cast<std::size_t>(batch * length))};
  for (std::int64_t b = 0; b < batch; ++b) {
    const auto& order = orders[static_cast<std::size_t>(b)];
    plan.ids_keep.data.insert(plan.ids_keep.data.end(), order.begin(), order.begin() + keep);
    plan.ids_mask.data.insert(plan.ids_mask.data.end(), order.begin() + keep, order.end());
    for (std::int64_t i = 0; i < length; ++i) {
      plan.ids_restore.data[static_cast<std::size_t>(b * length + order[static_cast<std::size_t>(i)])] = i;
    }
  }
  return plan;
}

}  // namespace

MaskPlan make_mask_plan(std::int64_t batch, std::int64_t length, double ratio, Rng& rng) {
  require(batch >= 1 && length >= 1, ErrorKind::InvalidArgument, "mask plan needs a non-empty batch and sequence");
  const std::int64_t keep = keep_count(length, ratio);
  if (keep == length) return identity_plan(batch, length);
  std::vector<std::vector<std::int64_t>> orders;
  std::vector<double> noise(static_cast<std::size_t>(length));
  for (std::int64_t b = 0; b < batch; ++b) {
    for (double& n : noise) n = rng.uniform();
    std::vector<std::int64_t> order(static_cast<std::size_t>(length));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t x, std::int64_t y) {
      return noise[static_cast<std::size_t>(x)] < noise[static_cast<std::size_t>(y)];
    });
    orders.push_back(std::move(order));
  }
  return plan_from_orders(batch, length, keep, orders);
}

MaskPlan identity_plan(std::int64_t batch, std::int64_t length) {
  std::vector<std::int64_t> order(static_cast<std::size_t>(length));
  std::iota(order.begin(), order.end(), 0);
  return plan_from_orders(batch, length, length, std::vector<std::vector<std::int64_t>>(static_cast<std::size_t>(batch), order));
}

Var random_masking(Var tokens, double ratio, Rng& rng, MaskPlan* plan) {
  require(tokens.value().rank() == 3, ErrorKind::Shape, "random_masking expects B x L x K tokens");
  MaskPlan p = make_mask_plan(tokens.shape()[0], tokens.shape()[1], ratio, rng);
  Var visible = ag::gather_rows(tokens, p.ids_keep);
  if (plan != nullptr) *plan = std::move(p);
  return visible;
}

}  // namespace fgmae
