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

#include "fgmae/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fgmae {
namespace {

double eval(const ScalarFn& f, const Tensor& x) {
  Tape tape(false);
  Var out = f(tape, tape.constant(x));
  double v = out.value().item();
  require(std::isfinite(v), ErrorKind::NonFinite, "grad_check: f is not finite");
  return v;
}

}  // namespace

double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  require(x.dtype() == Dtype::F64, ErrorKind::InvalidArgument, "grad_check needs an f64 input");
  Tape tape;
  Var xv = tape.leaf(x);
  Var out = f(tape, xv);
  require(std::isfinite(out.value().item()), ErrorKind::NonFinite, "grad_check: f is not finite");
  tape.backward(out);
  const auto analytic = tape.grad(xv).to_vector();

  double worst = 0.0;
  Tensor probe = x.clone();
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    auto d = probe.mutable_data<double>();
    const double orig = d[i];
    d[i] = orig + h;
    const double fp = eval(f, probe);
    probe.mutable_data<double>()[i] = orig - h;
    const double fm = eval(f, probe);
    probe.mutable_data<double>()[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

}  // namespace fgmae
