// include/sslab/asr/ctc.h

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

#ifndef SSLAB_ASR_CTC_H_
#define SSLAB_ASR_CTC_H_

#include <vector>

#include "sslab/audio/tokenizer.h"
#include "sslab/numerics/tensor.h"

namespace sslab {

struct CtcResult {
  Tensor loss;            // scalar; +inf when infeasible
  bool feasible = true;
  double log_prob() const { return -loss.item(); }
};

// Minimum number of frames that can emit `target`: its length plus one
// separating blank per adjacent repeat.
int64_t CtcMinFrames(const TokenSequence &target);

// Negative log of the total probability of all frame alignments of
// `target` under softmax(logits) (T x V, blank = 0).  Infeasible targets
// give +inf with feasible = false and a zero gradient.  Throws
// std::invalid_argument for blank or out-of-range target ids.
CtcResult CtcLoss(const Tensor &logits, const TokenSequence &target);

// Row-wise argmax (lowest id on ties), repeats collapsed, blanks removed.
TokenSequence GreedyDecode(const Tensor &logits);
// The uncollapsed argmax path.
std::vector<int> GreedyPath(const Tensor &logits);
TokenSequence CollapsePath(const std::vector<int> &path);

// Log-softmax of each row, as plain values.
std::vector<double> LogSoftmaxRows(const Tensor &logits);

}  // namespace sslab

#endif  // SSLAB_ASR_CTC_H_
