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

#include "fgmae/data/fgmr.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fgmae {
namespace {

static_assert(std::endian::native == std::endian::little,
              "FGMR encoding assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T take(const std::vector<std::uint8_t>& in, std::size_t& pos, const char* what) {
  if (pos + sizeof(T) > in.size()) {
    throw FgmrError(FgmrIssue::Truncated, std::string("truncated FGMR header (") + what + ")");
  }
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  require(t.defined(), ErrorKind::InvalidArgument, "cannot encode an undefined tensor");
  require(t.rank() <= kFgmrMaxRank, ErrorKind::InvalidArgument, "rank too large for FGMR");
  std::vector<std::uint8_t> out;
  auto payload = t.bytes();
  out.reserve(10 + 8 * t.rank() + payload.size());
  out.insert(out.end(), {'F', 'G', 'M', 'R'});
  put<std::uint32_t>(out, kFgmrVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (auto d : t.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  const auto* p = reinterpret_cast<const std::uint8_t*>(payload.data());
  out.insert(out.end(), p, p + payload.size());
  return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& in) {
  if (in.size() < 4 || std::memcmp(in.data(), "FGMR", 4) != 0) {
    throw FgmrError(FgmrIssue::BadMagic, "bad magic: not an FGMR tensor file");
  }
  std::size_t pos = 4;
  auto version = take<std::uint32_t>(in, pos, "version");
  if (version != kFgmrVersion) {
    throw FgmrError(FgmrIssue::UnsupportedVersion,
                    "unsupported FGMR version " + std::to_string(version));
  }
  auto code = take<std::uint8_t>(in, pos, "dtype");
  if (code != 1 && code != 2) {
    throw FgmrError(FgmrIssue::UnknownDtype, "unknown FGMR dtype code " + std::to_string(code));
  }
  const Dtype dtype = static_cast<Dtype>(code);
  auto rank = take<std::uint8_t>(in, pos, "rank");
  Shape shape(rank);
  for (auto& d : shape) {
    auto v = take<std::uint64_t>(in, pos, "dims");
    if (v > (std::uint64_t{1} << 40)) {
      throw FgmrError(FgmrIssue::Truncated, "implausible FGMR dimension " + std::to_string(v));
    }
    d = static_cast<std::int64_t>(v);
  }
  const std::size_t expected = static_cast<std::size_t>(shape_numel(shape)) * dtype_size(dtype);
  const std::size_t available = in.size() - pos;
  if (available < expected) {
    throw FgmrError(FgmrIssue::Truncated, "truncated FGMR payload: expected " +
                                              std::to_string(expected) + " bytes, found " +
                                              std::to_string(available));
  }
  if (available > expected) {
    throw FgmrError(FgmrIssue::TrailingBytes, "FGMR payload has " +
                                                  std::to_string(available - expected) +
                                                  " trailing bytes");
  }
  return visit_dtype(dtype, [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> values(expected / sizeof(T));
    if (expected) std::memcpy(values.data(), in.data() + pos, expected);
    return Tensor::from_vector(shape, std::move(values));
  });
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  auto bytes = encode_tensor(t);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const FgmrError& e) {
    throw FgmrError(e.issue(), path.string() + ": " + e.what());
  }
}

}  // namespace fgmae
