// include/sslab/asr/train.h

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

// Supervised CTC fine-tuning: encoder plus a linear output layer, two Adam
// optimisers with their own schedules, SpecAugment, EMA for evaluation.

#ifndef SSLAB_ASR_TRAIN_H_
#define SSLAB_ASR_TRAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sslab/audio/logmel.h"
#include "sslab/conformer/conformer.h"
#include "sslab/numerics/checkpoint.h"
#include "sslab/numerics/optim.h"
#include "sslab/numerics/params.h"
#include "sslab/specaugment/specaugment.h"

namespace sslab {

struct Utterance {
  std::string id;
  Spectrogram features;  // normalised log-mel
  std::string transcript;
};

enum class InitMode { kScratch, kEncoderPretrained, kFull };
std::string ToString(InitMode m);
InitMode InitModeFromString(const std::string &s);

struct FinetuneConfig {
  ConformerConfig encoder;
  LrSchedule encoder_schedule{1e-3, 500, LrScheduleKind::kTransformer};
  LrSchedule decoder_schedule{1e-3, 500, LrScheduleKind::kTransformer};
  int steps = 2000;
  int batch_size = 8;
  AugmentPolicy augment;
  bool use_augment = true;
  bool use_ema = true;
  double ema_decay = 0.9999;
  int eval_every = 0;  // 0: evaluate only at the end
  double clip_norm = 5.0;
  uint64_t seed = 1;
  InitMode init = InitMode::kScratch;

  void Validate() const;
};

// Encoder parameters plus "decoder/out/{w,b}".
ParamStore InitAsrModel(const ConformerConfig &cfg, uint64_t seed);

// Builds the starting parameters for `cfg.init`.  encoder-pretrained takes
// every "encoder/" tensor from the checkpoint and a fresh output layer;
// full takes everything.  Architecture mismatches throw
// std::invalid_argument before any training happens.
ParamStore PrepareInit(const FinetuneConfig &cfg, const Checkpoint *ckpt);

Tensor AsrLogits(const ParamStore &p, const ConformerConfig &cfg, const Tensor &features,
                 const EncodeOptions &opt = {});

// Greedy transcripts.
std::vector<std::string> Transcribe(const ParamStore &p, const ConformerConfig &cfg,
                                    const std::vector<Utterance> &data);
double EvaluateWer(const ParamStore &p, const ConformerConfig &cfg, const std::vector<Utterance> &data);

struct TrainLog {
  std::vector<std::pair<int64_t, double>> loss;     // every step
  std::vector<std::pair<int64_t, double>> dev_wer;  // every evaluation
};

class AsrTrainer {
 public:
  AsrTrainer(const FinetuneConfig &cfg, ParamStore init);

  // Mean CTC loss over the batch's feasible utterances.
  double Step(const std::vector<const Utterance *> &batch);

  int64_t step() const { return step_; }
  int64_t skipped() const { return skipped_; }
  const ParamStore &params() const { return params_; }
  ParamStore EvalParams() const;
  // Evaluation parameters plus metadata describing the architecture.
  Checkpoint Export() const;

 private:
  FinetuneConfig cfg_;
  ParamStore params_;
  std::vector<std::string> enc_names_, dec_names_;
  OptimizerState enc_adam_, dec_adam_;
  EmaState ema_;
  std::vector<std::string> all_names_;
  int64_t step_ = 0;
  int64_t skipped_ = 0;
};

using BatchProvider = std::function<std::vector<const Utterance *>(int64_t step)>;

// Epoch-wise seeded shuffles over `data`.
BatchProvider ShuffledBatches(const std::vector<Utterance> &data, int batch_size, uint64_t seed);

struct FinetuneResult {
  ParamStore eval_params;
  TrainLog log;
  double final_dev_wer = 0.0;
  Checkpoint checkpoint;
};

FinetuneResult RunFinetune(const FinetuneConfig &cfg, ParamStore init, const BatchProvider &batches,
                           const std::vector<Utterance> &dev);

// Encoder config recorded in a checkpoint's metadata.
ConformerConfig CheckpointEncoderConfig(const Checkpoint &ckpt);

}  // namespace sslab

#endif  // SSLAB_ASR_TRAIN_H_
