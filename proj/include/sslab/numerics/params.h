// include/sslab/numerics/params.h

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

#ifndef SSLAB_NUMERICS_PARAMS_H_
#define SSLAB_NUMERICS_PARAMS_H_

#include <map>
#include <random>
#include <string>
#include <vector>

#include "sslab/numerics/tensor.h"

namespace sslab {

// Named trainable tensors, ordered by name so that iteration (and therefore
// optimizer state layout and checkpoints) is deterministic.
class ParamStore {
 public:
  void Set(const std::string &name, Tensor value);
  const Tensor &Get(const std::string &name) const;
  bool Has(const std::string &name) const { return params_.count(name) > 0; }
  size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  std::vector<std::string> Names(const std::string &prefix = "") const;
  std::vector<Tensor> Tensors(const std::vector<std::string> &names) const;
  void Update(const std::vector<std::string> &names, const std::vector<Tensor> &values);
  int64_t NumScalars() const;

  // Copies every entry of `other` whose name starts with `prefix`.
  void Merge(const ParamStore &other, const std::string &prefix = "");

  const std::map<std::string, Tensor> &entries() const { return params_; }

 private:
  std::map<std::string, Tensor> params_;
};

// Initializers (trainable leaves).
Tensor GlorotUniform(int64_t fan_in, int64_t fan_out, Shape shape, std::mt19937_64 &rng);
Tensor NormalInit(Shape shape, double stddev, std::mt19937_64 &rng);

// Stable 64-bit seed derivation: mixes a base seed with a tag string.
uint64_t DeriveSeed(uint64_t base, const std::string &tag);
uint64_t DeriveSeed(uint64_t base, uint64_t index);

}  // namespace sslab

#endif  // SSLAB_NUMERICS_PARAMS_H_
