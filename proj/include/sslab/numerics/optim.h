// include/sslab/numerics/optim.h

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

#ifndef SSLAB_NUMERICS_OPTIM_H_
#define SSLAB_NUMERICS_OPTIM_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sslab/numerics/tensor.h"

namespace sslab {

struct OptimizerState {
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

OptimizerState MakeAdamState(std::span<const Tensor> params, double beta1 = 0.9,
                             double beta2 = 0.999, double epsilon = 1e-8);

// One bias-corrected Adam update.  Returns fresh trainable leaves; `state`
// advances by one step.  Throws ContractError on any shape disagreement.
std::vector<Tensor> AdamStep(std::span<const Tensor> params, std::span<const Tensor> grads,
                             OptimizerState &state, double lr);

struct EmaState {
  double decay = 0.9999;
  std::vector<std::vector<double>> shadow;
};

EmaState MakeEma(std::span<const Tensor> params, double decay);
// shadow <- decay * shadow + (1 - decay) * params
void EmaUpdate(EmaState &ema, std::span<const Tensor> params);

enum class LrScheduleKind { kTransformer, kConstantWithWarmup };

struct LrSchedule {
  double peak_lr = 1e-3;
  int64_t warmup_steps = 1000;
  LrScheduleKind kind = LrScheduleKind::kTransformer;
};

// Transformer: peak * min(step/warmup, sqrt(warmup/step)).
// Constant with warm-up: peak * min(step/warmup, 1).
// Steps are 1-based; step 0 throws.
double LrAt(const LrSchedule &schedule, int64_t step);

std::string ToString(LrScheduleKind kind);
LrScheduleKind LrScheduleKindFromString(const std::string &s);

// Scales gradients in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.  max_norm <= 0 disables clipping.
double ClipGlobalNorm(std::vector<Tensor> &grads, double max_norm);

}  // namespace sslab

#endif  // SSLAB_NUMERICS_OPTIM_H_
