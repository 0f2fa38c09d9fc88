// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense N-D tensor with tape-based reverse-mode autodiff. Tensor is a cheap
// handle: copies share storage, gradient and tape node. Values are immutable
// once produced by an op, except for gradient accumulation.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "mmsr/errors.hpp"

namespace mmsr {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

// Global (per-thread) autodiff switch; forward passes run without recording
// a tape while disabled.
inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

class NoGradGuard {
 public:
  NoGradGuard() : prev_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
class Tensor;

template <typename T>
struct TensorImpl;

// One recorded op on the tape. `inputs` are the graph edges; `backward` reads
// the output gradient and accumulates into the inputs' gradients. Values a
// backward pass needs are saved in the closure.
template <typename T>
struct TapeNode {
  const char* op;
  std::vector<Tensor<T>> inputs;
  std::function<void(TensorImpl<T>& out)> backward;
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::shared_ptr<TapeNode<T>> node;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = std::move(shape);
    t.impl_->data.assign(static_cast<size_t>(shape_numel(t.impl_->shape)), T(0));
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor full(Shape shape, T value) {
    Tensor t = zeros(std::move(shape));
    for (T& v : t.impl_->data) v = value;
    return t;
  }

  static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
      throw ShapeError("tensor: data length does not match shape " + shape_str(shape));
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }
  int64_t dim(size_t i) const { return impl_->shape[i]; }
  size_t ndim() const { return impl_->shape.size(); }

  // The handle has pointer semantics: a const Tensor still refers to mutable
  // shared storage, like a shared_ptr.
  std::span<T> data() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  // True when a backward pass should flow gradient into or through this
  // tensor (trainable leaf or recorded intermediate).
  bool needs_grad() const { return impl_ && (impl_->requires_grad || impl_->node != nullptr); }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<T> grad() const {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() const {
    for (T& g : impl_->grad) g = T(0);
  }

  const std::shared_ptr<TapeNode<T>>& node() const { return impl_->node; }
  void set_node(std::shared_ptr<TapeNode<T>> n) { impl_->node = std::move(n); }

  // Deep copy of the values, detached from the tape.
  Tensor clone() const {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = impl_->shape;
    t.impl_->data = impl_->data;
    return t;
  }

  // NCHW-style convenience indexing (tests, generators).
  T& at(std::initializer_list<int64_t> idx) {
    return impl_->data[flat_index(idx)];
  }
  T at(std::initializer_list<int64_t> idx) const {
    return impl_->data[flat_index(idx)];
  }

  bool all_finite() const {
    for (T v : impl_->data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  TensorImpl<T>* impl() const { return impl_.get(); }

 private:
  size_t flat_index(std::initializer_list<int64_t> idx) const {
    const Shape& s = impl_->shape;
    if (idx.size() != s.size()) throw ShapeError("tensor: index rank mismatch");
    int64_t flat = 0;
    size_t k = 0;
    for (int64_t i : idx) {
      flat = flat * s[k] + i;
      ++k;
    }
    return static_cast<size_t>(flat);
  }

  std::shared_ptr<TensorImpl<T>> impl_;
};

// Records `out` on the tape when autodiff is enabled and some input wants a
// gradient.
template <typename T>
void attach_node(Tensor<T>& out, const char* op, std::vector<Tensor<T>> inputs,
                 std::function<void(TensorImpl<T>&)> bw) {
  if (!grad_mode()) return;
  bool need = false;
  for (const auto& in : inputs)
    if (in.needs_grad()) need = true;
  if (!need) return;
  auto node = std::make_shared<TapeNode<T>>();
  node->op = op;
  node->inputs = std::move(inputs);
  node->backward = std::move(bw);
  out.set_node(std::move(node));
}

// Reverse pass from a scalar loss. Visits each recorded node exactly once in
// reverse topological order; leaf gradients accumulate across repeated calls.
template <typename T>
void backward(const Tensor<T>& loss, T seed = T(1)) {
  if (!loss.defined() || !loss.node())
    throw UsageError("backward: tensor is detached from the tape");
  if (loss.numel() != 1) throw UsageError("backward: loss must be a single element");

  loss.impl()->ensure_grad();
  loss.impl()->grad[0] += seed;

  // Iterative post-order DFS; `order` ends with the loss impl.
  std::vector<TensorImpl<T>*> order;
  std::unordered_set<TensorImpl<T>*> visited;
  struct Frame {
    TensorImpl<T>* impl;
    size_t next_input;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.impl(), 0});
  visited.insert(loss.impl());
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& node = f.impl->node;
    if (!node || f.next_input >= node->inputs.size()) {
      if (node) order.push_back(f.impl);
      stack.pop_back();
      continue;
    }
    TensorImpl<T>* in = node->inputs[f.next_input].impl();
    ++f.next_input;
    if (in->node && !visited.count(in)) {
      visited.insert(in);
      stack.push_back({in, 0});
    }
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    (*it)->ensure_grad();
    (*it)->node->backward(**it);
  }
}

}  // namespace mmsr
