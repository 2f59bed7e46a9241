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

#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

struct PatchGrid {
  std::int64_t rows = 0, cols = 0;
  std::int64_t count() const { return rows * cols; }
};

PatchGrid patch_grid(std::int64_t height, std::int64_t width, int patch);

// B x C x H x W -> B x L x (p*p*C). Patches are numbered row-major over the
// grid; each patch vector is channel-major, then row, then column.
Tensor patchify(const Tensor& images, int patch);
// Inverse of patchify for the given channel count and grid.
Tensor unpatchify(const Tensor& patches, int patch, std::int64_t channels, const PatchGrid& grid);

}  // namespace fgmae
