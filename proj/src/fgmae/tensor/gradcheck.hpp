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

#include <functional>

#include "fgmae/tensor/autograd.hpp"

namespace fgmae {

using ScalarFn = std::function<Var(Tape&, Var)>;

// Compares the tape gradient of f at x with central differences
// (f(x+h) - f(x-h)) / 2h coordinate by coordinate and returns
// max |numeric - analytic| / max(1, |analytic|). x must be f64.
double grad_check(const ScalarFn& f, const Tensor& x, double h = 1e-5);

}  // namespace fgmae
