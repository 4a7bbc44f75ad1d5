// src/asr/wer.cc

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

#include "sslab/asr/wer.h"

#include <algorithm>
#include <stdexcept>

#include "sslab/audio/tokenizer.h"

namespace sslab {

int WordEditDistance(const std::string &ref, const std::string &hyp) {
  const auto r = SplitWords(ref), h = SplitWords(hyp);
  std::vector<int> prev(h.size() + 1), cur(h.size() + 1);
  for (size_t j = 0; j <= h.size(); ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= r.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= h.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (r[i - 1] == h[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[h.size()];
}

double Wer(const std::vector<std::string> &refs, const std::vector<std::string> &hyps) {
  if (refs.size() != hyps.size())
    throw std::invalid_argument("Wer: " + std::to_string(refs.size()) + " references but " +
                                std::to_string(hyps.size()) + " hypotheses");
  long errors = 0, words = 0;
  for (size_t i = 0; i < refs.size(); ++i) {
    errors += WordEditDistance(refs[i], hyps[i]);
    words += CountWords(refs[i]);
  }
  if (words == 0) throw std::invalid_argument("Wer: reference corpus has no words");
  return static_cast<double>(errors) / static_cast<double>(words);
}

}  // namespace sslab
