// src/asr/lm.cc

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

#include "sslab/asr/lm.h"

#include <cmath>
#include <stdexcept>

namespace sslab {

CharNgramLm::CharNgramLm(int order, double add_k) : order_(order), add_k_(add_k) {
  if (order < 1) throw std::invalid_argument("CharNgramLm: order must be >= 1");
  if (!(add_k > 0.0)) throw std::invalid_argument("CharNgramLm: add_k must be > 0");
}

std::string CharNgramLm::Key(const TokenSequence &history) const {
  const size_t n = static_cast<size_t>(order_ - 1);
  std::string key(n, '\0');  // begin marker
  const size_t have = std::min(n, history.size());
  for (size_t i = 0; i < have; ++i) key[n - have + i] = static_cast<char>(history[history.size() - have + i]);
  return key;
}

void CharNgramLm::Train(const std::vector<std::string> &texts) {
  for (const auto &text : texts) {
    const TokenSequence ids = Encode(text);
    TokenSequence hist;
    for (int id : ids) {
      const std::string k = Key(hist);
      auto it = counts_.find(k);
      if (it == counts_.end()) {
        std::array<double, kNumSymbols> z{};
        it = counts_.emplace(k, z).first;
      }
      it->second[id - 1] += 1.0;
      totals_[k] += 1.0;
      hist.push_back(id);
    }
  }
}

double CharNgramLm::LogProb(const TokenSequence &history, int token) const {
  if (token < 1 || token > kNumSymbols) throw std::invalid_argument("CharNgramLm: token outside the grapheme set");
  const std::string k = Key(history);
  double c = 0.0, total = 0.0;
  if (auto it = counts_.find(k); it != counts_.end()) {
    c = it->second[token - 1];
    total = totals_.at(k);
  }
  return std::log((c + add_k_) / (total + add_k_ * kNumSymbols));
}

double CharNgramLm::LogProb(const std::string &text) const {
  const TokenSequence ids = Encode(text);
  TokenSequence hist;
  double s = 0.0;
  for (int id : ids) {
    s += LogProb(hist, id);
    hist.push_back(id);
  }
  return s;
}

}  // namespace sslab
