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

#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include "fgmae/tensor/tensor.hpp"

namespace fgmae {

class Tape;
class BackwardContext;

// Handle to one value recorded on a Tape. Cheap to copy; only valid while the
// owning Tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Dtype dtype() const { return value().dtype(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

using BackwardFn = std::function<void(BackwardContext&)>;

// Records one forward pass. Nodes are appended in evaluation order, so
// walking the node list backwards is a reverse topological order and every
// node is visited exactly once. Gradients arriving from several consumers
// are summed.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value, bool requires_grad = true);

  // Appends an op result. `value` must be finite; a non-finite result is an
  // error state and raises ErrorKind::NonFinite naming the op.
  Var record(std::string_view op, Tensor value, std::vector<Var> inputs,
             BackwardFn backward);

  // Seeds d(root)/d(root) = 1; root must hold a single element.
  void backward(Var root);
  void backward(Var root, Tensor seed);

  // Gradient of the last backward() root w.r.t. v; zeros when v received no
  // gradient (e.g. an unused parameter).
  Tensor grad(Var v) const;
  bool has_grad(Var v) const;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(int id) const { return nodes_.at(id).value; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  std::string_view op(int id) const { return nodes_.at(id).op; }

 private:
  friend class BackwardContext;

  struct Node {
    std::string_view op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    BackwardFn backward;
  };

  void accumulate(int id, Tensor g);

  bool grad_enabled_;
  std::deque<Node> nodes_;  // deque: references to values stay valid as nodes are appended
};

class BackwardContext {
 public:
  BackwardContext(Tape& tape, int node) : tape_(tape), node_(node) {}

  const Tensor& grad_output() const { return tape_.nodes_[node_].grad; }
  const Tensor& output() const { return tape_.nodes_[node_].value; }
  const Tensor& input(int i) const;
  bool needs(int i) const;
  void accumulate(int i, Tensor g);

 private:
  Tape& tape_;
  int node_;
};

}  // namespace fgmae
