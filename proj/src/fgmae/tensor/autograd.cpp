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

#include "fgmae/tensor/autograd.hpp"

#include <string>

namespace fgmae {

const Tensor& Var::value() const {
  require(tape_ != nullptr, ErrorKind::Internal, "use of an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) { return leaf(std::move(value), false); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  require(value.defined(), ErrorKind::Internal, "leaf from undefined tensor");
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::vector<Var> inputs,
                 BackwardFn backward) {
  if (!value.all_finite()) {
    fail(ErrorKind::NonFinite, "op '" + std::string(op) + "' produced non-finite values");
  }
  Node n;
  n.op = op;
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& v : inputs) {
      require(v.tape() == this, ErrorKind::Internal, "op inputs come from another tape");
      n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
    }
    if (n.requires_grad) {
      n.inputs.reserve(inputs.size());
      for (const Var& v : inputs) n.inputs.push_back(v.id());
      n.backward = std::move(backward);
    }
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var root) {
  const Tensor& v = root.value();
  require(v.numel() == 1, ErrorKind::Shape,
          "backward() without seed needs a scalar root, got " + shape_str(v.shape()));
  backward(root, Tensor::full(v.shape(), 1.0, v.dtype()));
}

void Tape::backward(Var root, Tensor seed) {
  require(grad_enabled_, ErrorKind::Internal, "backward() on a tape recorded without gradients");
  require(root.tape() == this, ErrorKind::Internal, "root belongs to another tape");
  for (auto& n : nodes_) n.grad = Tensor();
  accumulate(root.id(), std::move(seed));
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.grad.defined() || !n.backward) continue;
    BackwardContext ctx(*this, id);
    n.backward(ctx);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.defined()) return n.grad;
  return Tensor::zeros(n.value.shape(), n.value.dtype());
}

bool Tape::has_grad(Var v) const { return nodes_.at(v.id()).grad.defined(); }

void Tape::accumulate(int id, Tensor g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  require(g.shape() == n.value.shape(), ErrorKind::Internal,
          "gradient shape " + shape_str(g.shape()) + " does not match value " +
              shape_str(n.value.shape()) + " at op '" + std::string(n.op) + "'");
  if (g.dtype() != n.value.dtype()) g = g.to(n.value.dtype());
  if (!n.grad.defined()) {
    n.grad = std::move(g);
    return;
  }
  visit_dtype(n.grad.dtype(), [&](auto tag) {
    using T = decltype(tag);
    auto dst = n.grad.mutable_data<T>();
    auto src = g.data<T>();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  });
}

const Tensor& BackwardContext::input(int i) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs.at(i)].value;
}

bool BackwardContext::needs(int i) const {
  return tape_.nodes_[tape_.nodes_[node_].inputs.at(i)].requires_grad;
}

void BackwardContext::accumulate(int i, Tensor g) {
  tape_.accumulate(tape_.nodes_[node_].inputs.at(i), std::move(g));
}

}  // namespace fgmae
