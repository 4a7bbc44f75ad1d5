// src/numerics/params.cc

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

#include "sslab/numerics/params.h"

#include <cmath>

namespace sslab {

void ParamStore::Set(const std::string &name, Tensor value) {
  if (!value.defined()) throw ContractError("ParamStore::Set: undefined tensor for " + name);
  params_[name] = std::move(value);
}

const Tensor &ParamStore::Get(const std::string &name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("missing parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParamStore::Names(const std::string &prefix) const {
  std::vector<std::string> out;
  for (const auto &[name, _] : params_)
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  return out;
}

std::vector<Tensor> ParamStore::Tensors(const std::vector<std::string> &names) const {
  std::vector<Tensor> out;
  out.reserve(names.size());
  for (const auto &n : names) out.push_back(Get(n));
  return out;
}

void ParamStore::Update(const std::vector<std::string> &names, const std::vector<Tensor> &values) {
  if (names.size() != values.size()) throw ContractError("ParamStore::Update: size mismatch");
  for (size_t i = 0; i < names.size(); ++i) {
    const Tensor &old = Get(names[i]);
    if (old.shape() != values[i].shape())
      throw ContractError("ParamStore::Update: shape change for " + names[i]);
    params_[names[i]] = values[i];
  }
}

int64_t ParamStore::NumScalars() const {
  int64_t n = 0;
  for (const auto &[_, t] : params_) n += t.size();
  return n;
}

void ParamStore::Merge(const ParamStore &other, const std::string &prefix) {
  for (const auto &[name, t] : other.params_)
    if (name.compare(0, prefix.size(), prefix) == 0) params_[name] = t;
}

Tensor GlorotUniform(int64_t fan_in, int64_t fan_out, Shape shape, std::mt19937_64 &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<double> v(NumElements(shape));
  for (double &x : v) x = u(rng);
  return Tensor::FromData(std::move(shape), std::move(v), true);
}

Tensor NormalInit(Shape shape, double stddev, std::mt19937_64 &rng) {
  std::normal_distribution<double> n(0.0, stddev);
  std::vector<double> v(NumElements(shape));
  for (double &x : v) x = n(rng);
  return Tensor::FromData(std::move(shape), std::move(v), true);
}

namespace {
uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

uint64_t DeriveSeed(uint64_t base, const std::string &tag) {
  uint64_t h = 1469598103934665603ULL;  // FNV-1a over the tag
  for (unsigned char c : tag) h = (h ^ c) * 1099511628211ULL;
  return SplitMix64(base ^ SplitMix64(h));
}

uint64_t DeriveSeed(uint64_t base, uint64_t index) {
  return SplitMix64(base ^ SplitMix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace sslab
