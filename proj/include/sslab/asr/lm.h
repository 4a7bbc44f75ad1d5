// include/sslab/asr/lm.h

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

#ifndef SSLAB_ASR_LM_H_
#define SSLAB_ASR_LM_H_

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "sslab/audio/tokenizer.h"

namespace sslab {

// Character n-gram model over the 28 graphemes with add-k smoothing.
// Contexts shorter than order-1 are padded with a begin marker.
class CharNgramLm {
 public:
  static constexpr int kNumSymbols = kVocabSize - 1;

  explicit CharNgramLm(int order = 4, double add_k = 0.1);

  void Train(const std::vector<std::string> &texts);

  int order() const { return order_; }
  double add_k() const { return add_k_; }

  // log P(token | history), token in 1..28; only the last order-1 ids of
  // history are used.
  double LogProb(const TokenSequence &history, int token) const;
  double LogProb(const std::string &text) const;

 private:
  std::string Key(const TokenSequence &history) const;

  int order_;
  double add_k_;
  std::unordered_map<std::string, std::array<double, kNumSymbols>> counts_;
  std::unordered_map<std::string, double> totals_;
};

}  // namespace sslab

#endif  // SSLAB_ASR_LM_H_
