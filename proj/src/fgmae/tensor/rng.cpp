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

#include "fgmae/tensor/rng.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "fgmae/core/digest.hpp"

namespace fgmae {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : key_(splitmix64(seed)), counter_(0) {}

Rng::result_type Rng::operator()() {
  return splitmix64(key_ ^ splitmix64(counter_++));
}

Rng Rng::split(std::string_view name) const {
  Fnv1a h;
  h.update(name);
  return Rng(splitmix64(key_ ^ h.value()), 0);
}

Rng Rng::split(std::uint64_t index) const {
  return Rng(splitmix64(splitmix64(key_) ^ splitmix64(index + 0x632be59bd9b4e019ULL)), 0);
}

double Rng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t Rng::uniform_int(std::int64_t n) {
  std::uniform_int_distribution<std::int64_t> dist(0, n - 1);
  return dist(*this);
}

double Rng::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(*this);
}

double Rng::truncated_normal(double stddev) {
  for (;;) {
    double z = normal();
    if (std::abs(z) <= 2.0) return z * stddev;
  }
}

double Rng::gamma(double shape, double scale) {
  std::gamma_distribution<double> dist(shape, scale);
  return dist(*this);
}

double Rng::beta(double a, double b) {
  double x = gamma(a, 1.0);
  double y = gamma(b, 1.0);
  return x / (x + y);
}

std::vector<std::int64_t> Rng::permutation(std::int64_t n) {
  std::vector<std::int64_t> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (std::int64_t i = n - 1; i > 0; --i) {
    std::int64_t j = uniform_int(i + 1);
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace fgmae
