// include/sslab/pretrain/pretrain.h

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

// Contrastive pre-training of the encoder: span masking of the subsampled
// features, a learned mask vector, and an InfoNCE-style loss against a
// linear projection of the unmasked features.

#ifndef SSLAB_PRETRAIN_PRETRAIN_H_
#define SSLAB_PRETRAIN_PRETRAIN_H_

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sslab/conformer/conformer.h"
#include "sslab/numerics/checkpoint.h"
#include "sslab/numerics/optim.h"
#include "sslab/numerics/params.h"

namespace sslab {

struct MaskSpec {
  std::vector<int> span_starts;
  int span_length = 10;
  double start_prob = 0.065;
  std::vector<char> covered;  // one flag per position

  int num_covered() const;
  std::vector<int64_t> covered_positions() const;
};

// Each position starts a span with probability start_prob.  With force_one
// set and no start drawn, a single start is chosen uniformly.
MaskSpec SampleMasks(int length, double start_prob, int span_length, uint64_t seed, bool force_one = true);

struct ContrastiveBatch {
  Tensor contexts;                 // (M, d)
  Tensor targets;                  // (N, d), N >= M allowed
  std::vector<int64_t> positives;  // target row of each context
  std::vector<std::vector<int64_t>> negatives;  // K target rows per context
  double temperature = 0.1;
};

// Mean over contexts of -log softmax over {positive, negatives} of the
// cosine similarities divided by the temperature.  Throws ContractError on
// zero-norm vectors or inconsistent indices.
Tensor ContrastiveLoss(const ContrastiveBatch &b);

// K distractors for each covered position, drawn from the other covered
// positions (with replacement when fewer than K exist).  With a single
// covered position the uncovered ones are used instead.
std::vector<std::vector<int64_t>> SampleNegatives(const std::vector<int64_t> &covered, int64_t length,
                                                  int k, std::mt19937_64 &rng);

struct PretrainConfig {
  ConformerConfig encoder;
  double start_prob = 0.065;
  int span_length = 10;
  int num_negatives = 8;
  double temperature = 0.1;
  LrSchedule schedule{1e-3, 25000, LrScheduleKind::kTransformer};
  int steps = 1000;
  int batch_size = 8;
  bool use_ema = true;
  double ema_decay = 0.9999;
  bool stop_gradient_targets = false;
  double clip_norm = 5.0;
  uint64_t seed = 1;

  void Validate() const;
};

// Encoder parameters plus "pretrain/mask_emb" and "pretrain/target_proj/*".
ParamStore InitPretrainModel(const PretrainConfig &cfg, uint64_t seed);

struct UtteranceLoss {
  Tensor loss_sum;  // summed over anchors
  int anchors = 0;
};

// Masked forward pass and summed contrastive loss of one utterance.
UtteranceLoss PretrainUtteranceLoss(const ParamStore &p, const PretrainConfig &cfg, const Tensor &features,
                                    uint64_t seed, bool train);

class PretrainTrainer {
 public:
  PretrainTrainer(const PretrainConfig &cfg, ParamStore init);

  // One optimisation step on the given utterances; returns the mean loss.
  // Throws std::runtime_error with diagnostics on a non-finite loss.
  double Step(const std::vector<const Tensor *> &batch, const std::vector<std::string> &ids = {});

  int64_t step() const { return step_; }
  const ParamStore &params() const { return params_; }
  // EMA shadow when enabled, raw parameters otherwise.
  ParamStore EvalParams() const;
  // Encoder-only export of EvalParams().
  Checkpoint ExportEncoder() const;

 private:
  PretrainConfig cfg_;
  ParamStore params_;
  std::vector<std::string> names_;
  OptimizerState adam_;
  EmaState ema_;
  int64_t step_ = 0;
};

struct PretrainResult {
  std::vector<double> losses;  // one per step
  Checkpoint encoder;
};

// Full loop: batches are drawn by a seeded shuffle over `features`.
PretrainResult RunPretraining(const PretrainConfig &cfg, const std::vector<Tensor> &features,
                              const std::function<void(int64_t, double)> &on_step = {});

}  // namespace sslab

#endif  // SSLAB_PRETRAIN_PRETRAIN_H_
