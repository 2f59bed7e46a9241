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

#include "fgmae/tensor/ops.hpp"
#include "fgmae/tensor/rng.hpp"

namespace fgmae {

// Per-sample partition of L patch ids into kept and masked sets.
// ids_keep ++ ids_mask is the shuffle order; ids_restore is its inverse, so
// gathering the shuffled sequence at ids_restore yields canonical order.
struct MaskPlan {
  std::int64_t batch = 0;
  std::int64_t length = 0;
  IndexMatrix ids_keep;     // B x (L - L_m)
  IndexMatrix ids_mask;     // B x L_m
  IndexMatrix ids_restore;  // B x L

  std::int64_t kept() const { return ids_keep.cols; }
  std::int64_t masked() const { return ids_mask.cols; }
};

std::int64_t keep_count(std::int64_t length, double ratio);

// Argsort of i.i.d. uniform noise per sample; the first keep_count ids are
// kept. A ratio that keeps every patch yields the identity plan.
MaskPlan make_mask_plan(std::int64_t batch, std::int64_t length, double ratio, Rng& rng);
// Keeps every patch in canonical order.
MaskPlan identity_plan(std::int64_t batch, std::int64_t length);

// tokens [B, L, K] -> visible tokens [B, L - L_m, K]; the plan is written to *plan.
Var random_masking(Var tokens, double ratio, Rng& rng, MaskPlan* plan);

}  // namespace fgmae
