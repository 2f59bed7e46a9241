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
#include <limits>
#include <string_view>
#include <vector>

namespace fgmae {

// Counter-based generator: output i is a SplitMix64 hash of (key, i). The
// full state is the pair (key, counter), so it serializes trivially and a
// stream can be re-created at any position. Named sub-streams derived with
// split() are independent of each other, so adding a consumer never shifts
// the draws seen by another one.
//
// Satisfies UniformRandomBitGenerator, so <random> distributions work on it.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng() = default;
  explicit Rng(std::uint64_t seed);
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  Rng split(std::string_view name) const;
  Rng split(std::uint64_t index) const;

  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  std::int64_t uniform_int(std::int64_t n);  // [0, n)
  double normal(double mean = 0.0, double stddev = 1.0);
  // Normal truncated to [mean - 2 stddev, mean + 2 stddev] by rejection.
  double truncated_normal(double stddev);
  double gamma(double shape, double scale);
  double beta(double a, double b);

  std::vector<std::int64_t> permutation(std::int64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace fgmae
