// src/numerics/optim.cc

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

#include "sslab/numerics/optim.h"

#include <algorithm>
#include <cmath>

namespace sslab {

OptimizerState MakeAdamState(std::span<const Tensor> params, double beta1, double beta2,
                             double epsilon) {
  OptimizerState s;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const Tensor &p : params) {
    s.first_moment.emplace_back(p.size(), 0.0);
    s.second_moment.emplace_back(p.size(), 0.0);
  }
  return s;
}

std::vector<Tensor> AdamStep(std::span<const Tensor> params, std::span<const Tensor> grads,
                             OptimizerState &state, double lr) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size())
    throw ContractError("AdamStep: parameter/gradient/state counts disagree");
  if (!(lr > 0.0)) throw ContractError("AdamStep: learning rate must be positive");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape() ||
        static_cast<int64_t>(state.first_moment[i].size()) != params[i].size())
      throw ContractError("AdamStep: shape mismatch for parameter " + std::to_string(i) + " " +
                          ShapeString(params[i].shape()) + " vs gradient " +
                          ShapeString(grads[i].shape()));
  }
  const int64_t t = state.step + 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    auto &m = state.first_moment[i];
    auto &v = state.second_moment[i];
    std::vector<double> p(params[i].values());
    const auto &g = grads[i].values();
    for (size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    out.push_back(Tensor::FromData(params[i].shape(), std::move(p), true));
  }
  state.step = t;
  return out;
}

EmaState MakeEma(std::span<const Tensor> params, double decay) {
  if (!(decay > 0.0 && decay < 1.0)) throw ContractError("EMA decay must lie in (0,1)");
  EmaState e;
  e.decay = decay;
  for (const Tensor &p : params) e.shadow.push_back(p.values());
  return e;
}

void EmaUpdate(EmaState &ema, std::span<const Tensor> params) {
  if (params.size() != ema.shadow.size())
    throw ContractError("EmaUpdate: parameter count mismatch");
  const double d = ema.decay;
  for (size_t i = 0; i < params.size(); ++i) {
    auto &s = ema.shadow[i];
    if (static_cast<int64_t>(s.size()) != params[i].size())
      throw ContractError("EmaUpdate: shape mismatch for parameter " + std::to_string(i));
    const auto &p = params[i].values();
    for (size_t j = 0; j < s.size(); ++j) s[j] = d * s[j] + (1.0 - d) * p[j];
  }
}

double LrAt(const LrSchedule &schedule, int64_t step) {
  if (step < 1) throw ContractError("LrAt: steps are 1-based, got " + std::to_string(step));
  if (!(schedule.peak_lr > 0.0) || schedule.warmup_steps < 1)
    throw ContractError("LrAt: schedule needs peak_lr > 0 and warmup_steps >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(schedule.warmup_steps);
  switch (schedule.kind) {
    case LrScheduleKind::kTransformer:
      return schedule.peak_lr * std::min(s / w, std::sqrt(w / s));
    case LrScheduleKind::kConstantWithWarmup:
      return schedule.peak_lr * std::min(s / w, 1.0);
  }
  return schedule.peak_lr;
}

std::string ToString(LrScheduleKind kind) {
  return kind == LrScheduleKind::kTransformer ? "transformer" : "constant-with-linear-warmup";
}

LrScheduleKind LrScheduleKindFromString(const std::string &s) {
  if (s == "transformer") return LrScheduleKind::kTransformer;
  if (s == "constant-with-linear-warmup") return LrScheduleKind::kConstantWithWarmup;
  throw ContractError("unknown schedule kind '" + s + "'");
}

double ClipGlobalNorm(std::vector<Tensor> &grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor &g : grads)
    for (double v : g.values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (Tensor &g : grads) {
      std::vector<double> v(g.values());
      for (double &x : v) x *= f;
      g = Tensor::FromData(g.shape(), std::move(v));
    }
  }
  return norm;
}

}  // namespace sslab
