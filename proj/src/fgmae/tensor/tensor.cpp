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

#include "fgmae/tensor/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace fgmae {

const char* dtype_name(Dtype dtype) noexcept {
  return dtype == Dtype::F32 ? "f32" : "f64";
}

std::size_t dtype_size(Dtype dtype) noexcept {
  return dtype == Dtype::F32 ? 4 : 8;
}

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    require(d >= 0, ErrorKind::Shape, "negative dimension in " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::vector<std::int64_t> strides_of(const Shape& shape) {
  std::vector<std::int64_t> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
    s[i] = s[i + 1] * shape[i + 1];
  }
  return s;
}

Tensor Tensor::zeros(Shape shape, Dtype dtype) { return full(std::move(shape), 0.0, dtype); }

Tensor Tensor::full(Shape shape, double value, Dtype dtype) {
  Tensor t;
  t.numel_ = shape_numel(shape);
  t.shape_ = std::move(shape);
  t.dtype_ = dtype;
  if (dtype == Dtype::F32) {
    t.storage_ = std::make_shared<Buffer>(
        std::vector<float>(t.numel_, static_cast<float>(value)));
  } else {
    t.storage_ = std::make_shared<Buffer>(std::vector<double>(t.numel_, value));
  }
  return t;
}

Tensor Tensor::from_vector(Shape shape, std::vector<float> values) {
  Tensor t;
  t.numel_ = shape_numel(shape);
  require(t.numel_ == static_cast<std::int64_t>(values.size()), ErrorKind::Shape,
          "buffer length " + std::to_string(values.size()) + " != numel of " +
              shape_str(shape));
  t.shape_ = std::move(shape);
  t.dtype_ = Dtype::F32;
  t.storage_ = std::make_shared<Buffer>(std::move(values));
  return t;
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values) {
  Tensor t;
  t.numel_ = shape_numel(shape);
  require(t.numel_ == static_cast<std::int64_t>(values.size()), ErrorKind::Shape,
          "buffer length " + std::to_string(values.size()) + " != numel of " +
              shape_str(shape));
  t.shape_ = std::move(shape);
  t.dtype_ = Dtype::F64;
  t.storage_ = std::make_shared<Buffer>(std::move(values));
  return t;
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values, Dtype dtype) {
  if (dtype == Dtype::F64) {
    return from_vector(std::move(shape), std::vector<double>(values.begin(), values.end()));
  }
  std::vector<float> v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) v[i] = static_cast<float>(values[i]);
  return from_vector(std::move(shape), std::move(v));
}

Tensor Tensor::scalar(double value, Dtype dtype) { return full({}, value, dtype); }

std::int64_t Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  require(axis >= 0 && axis < rank(), ErrorKind::Shape,
          "axis " + std::to_string(axis) + " out of range for " + shape_str(shape_));
  return shape_[axis];
}

double Tensor::flat(std::int64_t i) const {
  return visit_dtype(dtype_, [&](auto tag) -> double {
    using T = decltype(tag);
    return static_cast<double>(data<T>()[i]);
  });
}

double Tensor::at(std::initializer_list<std::int64_t> index) const {
  require(static_cast<int>(index.size()) == rank(), ErrorKind::Shape,
          "index rank mismatch for " + shape_str(shape_));
  auto strides = strides_of(shape_);
  std::int64_t off = 0;
  int a = 0;
  for (auto i : index) {
    require(i >= 0 && i < shape_[a], ErrorKind::Shape, "index out of range");
    off += i * strides[a++];
  }
  return flat(off);
}

double Tensor::item() const {
  require(numel_ == 1, ErrorKind::Shape, "item() on tensor of shape " + shape_str(shape_));
  return flat(0);
}

Tensor Tensor::reshape(Shape shape) const {
  for (auto& d : shape) {
    if (d == -1) {
      std::int64_t rest = 1;
      for (auto e : shape) {
        if (e != -1) rest *= e;
      }
      require(rest > 0 && numel_ % rest == 0, ErrorKind::Shape,
              "cannot infer dimension reshaping " + shape_str(shape_));
      d = numel_ / rest;
      break;
    }
  }
  require(shape_numel(shape) == numel_, ErrorKind::Shape,
          "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  Tensor t = *this;
  t.shape_ = std::move(shape);
  return t;
}

Tensor Tensor::to(Dtype dtype) const {
  if (dtype == dtype_) return *this;
  return visit_dtype(dtype_, [&](auto tag) {
    using Src = decltype(tag);
    auto src = data<Src>();
    return visit_dtype(dtype, [&](auto tag2) {
      using Dst = decltype(tag2);
      std::vector<Dst> out(src.size());
      for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<Dst>(src[i]);
      return from_vector(shape_, std::move(out));
    });
  });
}

Tensor Tensor::clone() const {
  Tensor t = *this;
  if (storage_) t.storage_ = std::make_shared<Buffer>(*storage_);
  return t;
}

std::vector<double> Tensor::to_vector() const {
  std::vector<double> out(static_cast<std::size_t>(numel_));
  visit_dtype(dtype_, [&](auto tag) {
    using T = decltype(tag);
    auto d = data<T>();
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = static_cast<double>(d[i]);
  });
  return out;
}

bool Tensor::all_finite() const {
  return visit_dtype(dtype_, [&](auto tag) {
    using T = decltype(tag);
    for (T v : data<T>()) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  });
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (shape_ != other.shape_ || dtype_ != other.dtype_) return false;
  auto a = bytes();
  auto b = other.bytes();
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size()) == 0;
}

std::span<const std::byte> Tensor::bytes() const {
  if (!storage_) return {};
  return visit_dtype(dtype_, [&](auto tag) {
    using T = decltype(tag);
    return std::as_bytes(data<T>());
  });
}

void Tensor::check_dtype(Dtype expected) const {
  require(storage_ != nullptr, ErrorKind::Internal, "access to undefined tensor");
  require(dtype_ == expected, ErrorKind::Shape,
          std::string("dtype mismatch: tensor is ") + dtype_name(dtype_) +
              ", accessed as " + dtype_name(expected));
}

void Tensor::detach() {
  if (storage_.use_count() > 1) {
    storage_ = std::make_shared<Buffer>(*storage_);
  }
}

}  // namespace fgmae
