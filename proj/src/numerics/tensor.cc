// src/numerics/tensor.cc

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

#include "sslab/numerics/tensor.h"

#include <sstream>
#include <unordered_set>
#include <utility>

namespace sslab {

namespace {
thread_local bool g_record_grad = true;
}  // namespace

int64_t NumElements(const Shape &shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ContractError("negative dimension in shape " + ShapeString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ")";
  return os.str();
}

Tensor Tensor::FromData(Shape shape, std::vector<double> values, bool requires_grad) {
  if (NumElements(shape) != static_cast<int64_t>(values.size()))
    throw ContractError("shape " + ShapeString(shape) + " does not match " +
                        std::to_string(values.size()) + " values");
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::Zeros(Shape shape, bool requires_grad) {
  return Filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::Filled(Shape shape, double value, bool requires_grad) {
  int64_t n = NumElements(shape);
  return FromData(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::Scalar(double value, bool requires_grad) {
  return FromData({}, {value}, requires_grad);
}

const Shape &Tensor::shape() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->shape;
}

int64_t Tensor::dim(int64_t i) const {
  const Shape &s = shape();
  if (i < 0 || i >= static_cast<int64_t>(s.size()))
    throw ContractError("dimension index " + std::to_string(i) + " out of range for " +
                        ShapeString(s));
  return s[i];
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + ShapeString(shape()));
  return node_->value[0];
}

Tensor Tensor::Detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

Tensor Tensor::AsLeaf() const {
  return FromData(node_->shape, node_->value, true);
}

Tensor Tensor::MakeOp(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                      detail::BackwardFn backward) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (NumElements(node->shape) != static_cast<int64_t>(node->value.size()))
    throw ContractError("op output shape " + ShapeString(node->shape) + " mismatches data");
  bool needs = false;
  if (g_record_grad) {
    for (const Tensor &p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (Tensor &p : parents) node->parents.push_back(std::move(p.node_));
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_record_grad) { g_record_grad = false; }
NoGradGuard::~NoGradGuard() { g_record_grad = previous_; }

bool GradRecordingEnabled() { return g_record_grad; }

Tensor Gradients::of(const Tensor &t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) return Tensor::Zeros(t.shape());
  return Tensor::FromData(t.shape(), it->second);
}

Gradients Backward(const Tensor &loss, std::span<const Tensor> params) {
  if (!loss.defined() || loss.size() != 1)
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? ShapeString(loss.shape()) : std::string("<undefined>")));
  Gradients result;
  std::unordered_set<const detail::Node *> wanted;
  for (const Tensor &p : params) wanted.insert(p.id());
  if (!loss.requires_grad()) return result;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<const detail::Node *> order;
  std::unordered_set<const detail::Node *> visited;
  std::vector<std::pair<const detail::Node *, size_t>> stack;
  stack.emplace_back(loss.id(), 0);
  visited.insert(loss.id());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      const detail::Node *p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<const detail::Node *, std::vector<double>> grads;
  grads[loss.id()] = std::vector<double>(1, 1.0);
  std::vector<std::vector<double> *> parent_bufs;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const detail::Node *node = *it;
    auto g = grads.find(node);
    if (g == grads.end()) continue;
    // Element references survive rehashing; iterators do not.
    std::vector<double> &out_grad = g->second;
    if (node->backward) {
      parent_bufs.assign(node->parents.size(), nullptr);
      for (size_t i = 0; i < node->parents.size(); ++i) {
        const detail::Node *p = node->parents[i].get();
        if (!p->requires_grad) continue;
        auto &buf = grads[p];
        if (buf.empty()) buf.assign(p->value.size(), 0.0);
        parent_bufs[i] = &buf;
      }
      node->backward(node->value, out_grad, parent_bufs);
    }
    if (wanted.count(node)) {
      result.grads_[node] = std::move(out_grad);
    }
    grads.erase(node);
  }
  return result;
}

}  // namespace sslab
