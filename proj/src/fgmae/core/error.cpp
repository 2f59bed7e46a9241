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

#include "fgmae/core/error.hpp"

namespace fgmae {

const char* error_tag(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
      return "config";
    case ErrorKind::Io:
      return "io";
    case ErrorKind::Geometry:
      return "geometry";
    case ErrorKind::NonFinite:
      return "nonfinite";
    case ErrorKind::Shape:
      return "shape";
    case ErrorKind::InvalidArgument:
      return "argument";
    case ErrorKind::Internal:
      break;
  }
  return "internal";
}

}  // namespace fgmae
