// src/asr/ctc.cc

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

#include "sslab/asr/ctc.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sslab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

std::vector<double> LogSoftmaxRows(const Tensor &logits) {
  const int64_t T = logits.rows(), V = logits.cols();
  std::vector<double> out(T * V);
  for (int64_t t = 0; t < T; ++t) {
    const double *row = logits.data() + t * V;
    double m = row[0];
    for (int64_t k = 1; k < V; ++k) m = std::max(m, row[k]);
    double s = 0.0;
    for (int64_t k = 0; k < V; ++k) s += std::exp(row[k] - m);
    const double lse = m + std::log(s);
    for (int64_t k = 0; k < V; ++k) out[t * V + k] = row[k] - lse;
  }
  return out;
}

int64_t CtcMinFrames(const TokenSequence &target) {
  int64_t n = static_cast<int64_t>(target.size());
  for (size_t i = 1; i < target.size(); ++i) n += target[i] == target[i - 1];
  return n;
}

CtcResult CtcLoss(const Tensor &logits, const TokenSequence &target) {
  if (logits.ndim() != 2) throw std::invalid_argument("CtcLoss: logits must be T x V");
  const int64_t T = logits.rows(), V = logits.cols();
  for (int id : target)
    if (id <= kBlankId || id >= V)
      throw std::invalid_argument("CtcLoss: target id " + std::to_string(id) + " is blank or outside the vocabulary");
  if (T < 1 || CtcMinFrames(target) > T) {
    CtcResult r;
    r.feasible = false;
    r.loss = Tensor::MakeOp({}, {std::numeric_limits<double>::infinity()}, {logits},
                            [](const std::vector<double> &, const std::vector<double> &,
                               std::span<std::vector<double> *>) {});
    return r;
  }
  const std::vector<double> lp = LogSoftmaxRows(logits);
  const int64_t S = 2 * static_cast<int64_t>(target.size()) + 1;
  std::vector<int> ext(S, kBlankId);
  for (size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];
  auto skip_ok = [&](int64_t s) { return s >= 2 && ext[s] != kBlankId && ext[s] != ext[s - 2]; };

  // alpha includes the emission at t; so does beta.
  std::vector<double> alpha(T * S, kNegInf), beta(T * S, kNegInf);
  alpha[0] = lp[ext[0]];
  if (S > 1) alpha[1] = lp[ext[1]];
  for (int64_t t = 1; t < T; ++t) {
    for (int64_t s = 0; s < S; ++s) {
      double a = alpha[(t - 1) * S + s];
      if (s >= 1) a = LogAdd(a, alpha[(t - 1) * S + s - 1]);
      if (skip_ok(s)) a = LogAdd(a, alpha[(t - 1) * S + s - 2]);
      alpha[t * S + s] = a == kNegInf ? kNegInf : a + lp[t * V + ext[s]];
    }
  }
  beta[(T - 1) * S + S - 1] = lp[(T - 1) * V + ext[S - 1]];
  if (S > 1) beta[(T - 1) * S + S - 2] = lp[(T - 1) * V + ext[S - 2]];
  for (int64_t t = T - 2; t >= 0; --t) {
    for (int64_t s = 0; s < S; ++s) {
      double b = beta[(t + 1) * S + s];
      if (s + 1 < S) b = LogAdd(b, beta[(t + 1) * S + s + 1]);
      if (s + 2 < S && skip_ok(s + 2)) b = LogAdd(b, beta[(t + 1) * S + s + 2]);
      beta[t * S + s] = b == kNegInf ? kNegInf : b + lp[t * V + ext[s]];
    }
  }
  double logp = alpha[(T - 1) * S + S - 1];
  if (S > 1) logp = LogAdd(logp, alpha[(T - 1) * S + S - 2]);

  // d(-logp)/d logits[t,k] = softmax[t,k] - sum_{s: ext[s]=k} exp(alpha+beta-lp[t,k]-logp)
  std::vector<double> grad(T * V);
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t k = 0; k < V; ++k) grad[t * V + k] = std::exp(lp[t * V + k]);
    std::vector<double> occ(V, kNegInf);
    for (int64_t s = 0; s < S; ++s) occ[ext[s]] = LogAdd(occ[ext[s]], alpha[t * S + s] + beta[t * S + s]);
    for (int64_t k = 0; k < V; ++k)
      if (occ[k] != kNegInf) grad[t * V + k] -= std::exp(occ[k] - lp[t * V + k] - logp);
  }
  CtcResult r;
  r.loss = Tensor::MakeOp({}, {-logp}, {logits},
                          [grad = std::move(grad)](const std::vector<double> &, const std::vector<double> &g,
                                                   std::span<std::vector<double> *> pg) {
                            if (!pg[0]) return;
                            for (size_t i = 0; i < grad.size(); ++i) (*pg[0])[i] += g[0] * grad[i];
                          });
  return r;
}

std::vector<int> GreedyPath(const Tensor &logits) {
  const int64_t T = logits.rows(), V = logits.cols();
  std::vector<int> path(T);
  for (int64_t t = 0; t < T; ++t) {
    int best = 0;
    for (int64_t k = 1; k < V; ++k)
      if (logits.at(t, k) > logits.at(t, best)) best = static_cast<int>(k);
    path[t] = best;
  }
  return path;
}

TokenSequence CollapsePath(const std::vector<int> &path) {
  TokenSequence out;
  int prev = -1;
  for (int k : path) {
    if (k != prev && k != kBlankId) out.push_back(k);
    prev = k;
  }
  return out;
}

TokenSequence GreedyDecode(const Tensor &logits) { return CollapsePath(GreedyPath(logits)); }

}  // namespace sslab
