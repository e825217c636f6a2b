// Copyright 2026 The OPVForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <vector>

#include "opvforge/ad/tensor.hpp"

namespace opv::ad {

template <typename T>
class Tape;

// Handle to a value recorded on a Tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  int id() const { return id_; }
  Tape<T>& tape() const { return *tape_; }
  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  int64_t dim(int axis) const { return value().dim(axis); }

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode recording. Records are appended in evaluation order, so every
// record's inputs precede it; backward() walks them in reverse. A tape is
// owned by one thread for one forward/backward pass.
template <typename T>
class Tape {
 public:
  // Called with the output gradient and output value; accumulates into the
  // input gradient buffers.
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out, const Tensor<T>& out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  size_t size() const { return nodes_.size(); }

  Var<T> constant(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
  }

  // Leaf whose gradient is kept and readable through grad().
  Var<T> leaf(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = grad_enabled_;
    return push(std::move(n));
  }

  // Leaf borrowing a parameter's value; gradients accumulate into p.grad.
  Var<T> param(Parameter<T>& p) {
    Node n;
    n.borrowed = &p.value;
    n.param = &p;
    n.requires_grad = grad_enabled_;
    return push(std::move(n));
  }

  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
    return record_impl(std::move(value), inputs.begin(), inputs.end(), std::move(fn));
  }

  Var<T> record(Tensor<T> value, const std::vector<Var<T>>& inputs, BackwardFn fn) {
    return record_impl(std::move(value), inputs.begin(), inputs.end(), std::move(fn));
  }

  const Tensor<T>& value(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.borrowed ? *n.borrowed : n.owned;
  }

  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }
  bool requires_grad(Var<T> v) const { return requires_grad(v.id()); }

  // Zero-initialized on first access. Parameter nodes alias Parameter::grad.
  Tensor<T>& grad_buffer(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.param) {
      if (n.param->grad.size() != n.param->value.size()) n.param->grad = Tensor<T>(n.param->value.shape());
      n.param->has_grad = true;
      return n.param->grad;
    }
    if (n.grad.empty() && value(id).size() > 0) n.grad = Tensor<T>(value(id).shape());
    return n.grad;
  }

  // Gradient of a leaf after backward(), or nullptr.
  const Tensor<T>* grad(Var<T> v) const {
    const Node& n = nodes_[static_cast<size_t>(v.id())];
    if (n.param) return n.param->has_grad ? &n.param->grad : nullptr;
    return n.grad.empty() ? nullptr : &n.grad;
  }

  // Seeds d(root)/d(root) = 1 and propagates. root must hold one element.
  void backward(Var<T> root) {
    if (root.value().size() != 1) throw ShapeError("backward() needs a scalar root");
    if (!requires_grad(root.id())) return;
    grad_buffer(root.id()).fill(T(1));
    for (int id = root.id(); id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (!n.backward || n.grad.empty()) continue;
      BackwardFn fn = std::move(n.backward);
      n.backward = nullptr;
      fn(*this, n.grad, value(id));
      if (id != root.id()) n.grad = Tensor<T>();
    }
  }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* borrowed = nullptr;
    Parameter<T>* param = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  template <typename It>
  Var<T> record_impl(Tensor<T> value, It begin, It end, BackwardFn fn) {
    Node n;
    n.owned = std::move(value);
    if (grad_enabled_) {
      for (It it = begin; it != end; ++it) {
        if (it->valid() && requires_grad(it->id())) {
          n.requires_grad = true;
          break;
        }
      }
    }
    if (n.requires_grad) n.backward = std::move(fn);
    return push(std::move(n));
  }

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
  }

  bool grad_enabled_;
  std::deque<Node> nodes_;
};

}  // namespace opv::ad
