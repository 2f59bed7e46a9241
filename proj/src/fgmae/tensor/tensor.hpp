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
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "fgmae/core/error.hpp"

namespace fgmae {

enum class Dtype : std::uint8_t { F32 = 1, F64 = 2 };

const char* dtype_name(Dtype dtype) noexcept;
std::size_t dtype_size(Dtype dtype) noexcept;

template <class T>
constexpr Dtype dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? Dtype::F32 : Dtype::F64;
}

// Calls f with a value of the scalar type that matches `dtype`, so kernels can
// be written once as generic lambdas: visit_dtype(d, [&](auto tag) { using T =
// decltype(tag); ... }).
template <class F>
decltype(auto) visit_dtype(Dtype dtype, F&& f) {
  if (dtype == Dtype::F32) {
    return f(float{});
  }
  return f(double{});
}

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major array. Storage is shared between copies and never mutated
// in place once shared: mutable_data() detaches first, so a Tensor behaves as
// an immutable value that is cheap to copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, Dtype dtype = Dtype::F32);
  static Tensor full(Shape shape, double value, Dtype dtype = Dtype::F32);
  static Tensor from_vector(Shape shape, std::vector<float> values);
  static Tensor from_vector(Shape shape, std::vector<double> values);
  // Values are converted to `dtype`.
  static Tensor from_values(Shape shape, std::span<const double> values,
                            Dtype dtype);
  static Tensor scalar(double value, Dtype dtype = Dtype::F64);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t dim(int axis) const;
  std::int64_t numel() const { return numel_; }
  Dtype dtype() const { return dtype_; }

  template <class T>
  std::span<const T> data() const {
    check_dtype(dtype_of<T>());
    const auto& v = std::get<std::vector<T>>(*storage_);
    return {v.data(), v.size()};
  }

  template <class T>
  std::span<T> mutable_data() {
    check_dtype(dtype_of<T>());
    detach();
    auto& v = std::get<std::vector<T>>(*storage_);
    return {v.data(), v.size()};
  }

  double at(std::initializer_list<std::int64_t> index) const;
  double flat(std::int64_t i) const;
  double item() const;

  // Views sharing storage with this tensor.
  Tensor reshape(Shape shape) const;

  Tensor to(Dtype dtype) const;
  Tensor clone() const;
  std::vector<double> to_vector() const;

  bool all_finite() const;
  bool bitwise_equal(const Tensor& other) const;
  // Raw little-endian payload bytes, for digests and serialization.
  std::span<const std::byte> bytes() const;

 private:
  using Buffer = std::variant<std::vector<float>, std::vector<double>>;

  void check_dtype(Dtype expected) const;
  void detach();

  Shape shape_;
  std::int64_t numel_ = 0;
  Dtype dtype_ = Dtype::F32;
  std::shared_ptr<Buffer> storage_;
};

// Row-major strides for `shape`.
std::vector<std::int64_t> strides_of(const Shape& shape);

}  // namespace fgmae
