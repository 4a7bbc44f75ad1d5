// include/sslab/asr/decode.h

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

#ifndef SSLAB_ASR_DECODE_H_
#define SSLAB_ASR_DECODE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "sslab/asr/lm.h"
#include "sslab/audio/tokenizer.h"
#include "sslab/numerics/tensor.h"

namespace sslab {

struct FusionParams {
  double fusion_weight = 0.0;     // lambda >= 0
  double non_blank_reward = 0.0;  // beta
  int beam_width = 8;

  void Validate() const;
};

struct BeamResult {
  TokenSequence tokens;
  double score = 0.0;  // fused objective of the returned string
};

// Fused objective of a single frame path:
// sum_t log p(path_t) + lambda * log P_lm(collapse(path)) + beta * |collapse(path)|.
double FusedPathScore(const Tensor &logits, const std::vector<int> &path, const CharNgramLm *lm,
                      const FusionParams &fp);

// Prefix beam search over (prefix, ends-in-blank) hypotheses.  LM scores
// are added per emitted grapheme at emission.  The greedy path is always
// among the final candidates, so the returned score is never below its
// fused path score.  lm may be null only when fusion_weight is 0.
BeamResult BeamDecodeFused(const Tensor &logits, const CharNgramLm *lm, const FusionParams &fp);

struct DevItem {
  Tensor logits;
  std::string reference;
};

struct FusionTrial {
  double fusion_weight = 0.0;
  double non_blank_reward = 0.0;
  double wer = 0.0;
};

struct TuneFusionOptions {
  int trials = 20;
  uint64_t seed = 1;
  int beam_width = 8;
  // Evaluate (0, 0) first, ahead of the sampled pairs.
  bool include_baseline = true;
};

struct TuneFusionResult {
  FusionParams best;
  double best_wer = 0.0;
  std::vector<FusionTrial> trials;  // in evaluation order
};

std::string DecodeText(const Tensor &logits, const CharNgramLm *lm, const FusionParams &fp);

// Samples lambda ~ U[0,1], beta ~ U[-1,1]; returns the pair with the lowest
// dev WER (earliest on ties).  Throws on an empty dev set or trials < 1.
TuneFusionResult TuneFusion(const std::vector<DevItem> &dev, const CharNgramLm &lm, const TuneFusionOptions &opt);

}  // namespace sslab

#endif  // SSLAB_ASR_DECODE_H_
