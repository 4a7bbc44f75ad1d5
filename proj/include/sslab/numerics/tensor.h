// include/sslab/numerics/tensor.h

// Copyright 2026  The sslab Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SSLAB_NUMERICS_TENSOR_H_
#define SSLAB_NUMERICS_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sslab {

using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

// Raised when a caller breaks an operation's preconditions (shape mismatch,
// non-scalar loss, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

// Backward callback: receives the node's output value and gradient, and one
// buffer per parent.  Buffers of parents that do not need a gradient are
// nullptr.  Buffers are pre-sized and must be accumulated into.
using BackwardFn = std::function<void(const std::vector<double> &out_value,
                                      const std::vector<double> &out_grad,
                                      std::span<std::vector<double> *> parent_grads)>;

struct Node {
  Shape shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<std::shared_ptr<const Node>> parents;
  BackwardFn backward;
};

}  // namespace detail

/// Immutable n-dimensional array of doubles with an optional link into the
/// recorded computation trace.  Copies share storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor FromData(Shape shape, std::vector<double> values,
                         bool requires_grad = false);
  static Tensor Zeros(Shape shape, bool requires_grad = false);
  static Tensor Filled(Shape shape, double value, bool requires_grad = false);
  static Tensor Scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape &shape() const;
  int64_t ndim() const { return static_cast<int64_t>(shape().size()); }
  int64_t dim(int64_t i) const;
  int64_t size() const { return static_cast<int64_t>(node_->value.size()); }
  // 2-D helpers.
  int64_t rows() const { return dim(0); }
  int64_t cols() const { return dim(1); }

  const std::vector<double> &values() const { return node_->value; }
  const double *data() const { return node_->value.data(); }
  double operator[](int64_t i) const { return node_->value[i]; }
  double at(int64_t r, int64_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }

  // Same values, cut from the trace.
  Tensor Detach() const;
  // Same values as a fresh trainable leaf.
  Tensor AsLeaf() const;

  const detail::Node *id() const { return node_.get(); }
  const std::shared_ptr<const detail::Node> &node() const { return node_; }

  // Builds an operation output.  The node records parents and the backward
  // callback only when recording is enabled and some parent needs a gradient.
  static Tensor MakeOp(Shape shape, std::vector<double> values,
                       std::vector<Tensor> parents, detail::BackwardFn backward);

 private:
  explicit Tensor(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::Node> node_;
};

// Disables trace recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

bool GradRecordingEnabled();

/// Gradients keyed by tensor identity.  Lookups for tensors the loss does not
/// reach return zeros of the tensor's shape.
class Gradients {
 public:
  Tensor of(const Tensor &t) const;
  bool contains(const Tensor &t) const { return grads_.count(t.id()) > 0; }

 private:
  friend Gradients Backward(const Tensor &loss, std::span<const Tensor> params);
  std::unordered_map<const detail::Node *, std::vector<double>> grads_;
};

// Reverse-mode sweep from a scalar loss.  Gradients are kept for `params`
// (and nothing else); unreachable params map to zeros.
Gradients Backward(const Tensor &loss, std::span<const Tensor> params);

}  // namespace sslab

#endif  // SSLAB_NUMERICS_TENSOR_H_
