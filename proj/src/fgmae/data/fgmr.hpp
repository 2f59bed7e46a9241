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
#include <filesystem>
#include <string>
#include <vector>

#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

// FGMR tensor container, little-endian:
//   "FGMR" | version u32 | dtype u8 (1=f32, 2=f64) | rank u8 | dims u64[rank] | payload
inline constexpr std::uint32_t kFgmrVersion = 1;
inline constexpr int kFgmrMaxRank = 255;

enum class FgmrIssue { BadMagic, UnsupportedVersion, UnknownDtype, Truncated, TrailingBytes };

class FgmrError : public Error {
 public:
  FgmrError(FgmrIssue issue, const std::string& message)
      : Error(ErrorKind::Io, message), issue_(issue) {}
  FgmrIssue issue() const noexcept { return issue_; }

 private:
  FgmrIssue issue_;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace fgmae
