// src/asr/decode.cc

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

#include "sslab/asr/decode.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "sslab/asr/ctc.h"
#include "sslab/asr/wer.h"

namespace sslab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct Hyp {
  TokenSequence prefix;
  bool blank_end = true;
  double ac = 0.0;  // log CTC probability of the retained alignments
  double lm = 0.0;  // log LM probability of the prefix
};

double Fused(const Hyp &h, const FusionParams &fp) {
  return h.ac + fp.fusion_weight * h.lm + fp.non_blank_reward * static_cast<double>(h.prefix.size());
}

std::string Key(const TokenSequence &prefix, bool blank_end) {
  std::string k(prefix.begin(), prefix.end());
  k.push_back(blank_end ? 'B' : 'N');
  return k;
}

void CheckLm(const CharNgramLm *lm, const FusionParams &fp) {
  fp.Validate();
  if (fp.fusion_weight != 0.0 && lm == nullptr) throw std::invalid_argument("fusion weight is non-zero but no LM given");
}

}  // namespace

void FusionParams::Validate() const {
  if (beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
  if (!(fusion_weight >= 0.0)) throw std::invalid_argument("fusion_weight must be >= 0");
  if (!std::isfinite(non_blank_reward)) throw std::invalid_argument("non_blank_reward must be finite");
}

double FusedPathScore(const Tensor &logits, const std::vector<int> &path, const CharNgramLm *lm,
                      const FusionParams &fp) {
  CheckLm(lm, fp);
  const std::vector<double> lp = LogSoftmaxRows(logits);
  const int64_t V = logits.cols();
  double s = 0.0;
  for (size_t t = 0; t < path.size(); ++t) s += lp[t * V + path[t]];
  const TokenSequence out = CollapsePath(path);
  if (fp.fusion_weight != 0.0) {
    TokenSequence hist;
    for (int id : out) {
      s += fp.fusion_weight * lm->LogProb(hist, id);
      hist.push_back(id);
    }
  }
  return s + fp.non_blank_reward * static_cast<double>(out.size());
}

BeamResult BeamDecodeFused(const Tensor &logits, const CharNgramLm *lm, const FusionParams &fp) {
  CheckLm(lm, fp);
  const int64_t T = logits.rows(), V = logits.cols();
  const std::vector<double> lp = LogSoftmaxRows(logits);
  const bool use_lm = fp.fusion_weight != 0.0;

  std::vector<Hyp> beam{Hyp{}};
  for (int64_t t = 0; t < T; ++t) {
    std::vector<Hyp> next;
    std::unordered_map<std::string, size_t> where;
    auto push = [&](TokenSequence prefix, bool blank_end, double ac, double lmscore) {
      std::string k = Key(prefix, blank_end);
      auto it = where.find(k);
      if (it != where.end()) {
        next[it->second].ac = LogAdd(next[it->second].ac, ac);
        return;
      }
      where.emplace(std::move(k), next.size());
      next.push_back(Hyp{std::move(prefix), blank_end, ac, lmscore});
    };
    for (const Hyp &h : beam) {
      const int last = h.prefix.empty() ? -1 : h.prefix.back();
      for (int64_t k = 0; k < V; ++k) {
        const double ac = h.ac + lp[t * V + k];
        if (k == kBlankId) {
          push(h.prefix, true, ac, h.lm);
        } else if (k == last && !h.blank_end) {
          push(h.prefix, false, ac, h.lm);
        } else {
          TokenSequence p = h.prefix;
          p.push_back(static_cast<int>(k));
          const double l = use_lm ? h.lm + lm->LogProb(h.prefix, static_cast<int>(k)) : 0.0;
          push(std::move(p), false, ac, l);
        }
      }
    }
    std::stable_sort(next.begin(), next.end(),
                     [&](const Hyp &a, const Hyp &b) { return Fused(a, fp) > Fused(b, fp); });
    if (static_cast<int>(next.size()) > fp.beam_width) next.resize(fp.beam_width);
    beam = std::move(next);
  }

  // Merge the two ending states of each prefix, keeping beam order.
  std::vector<Hyp> finals;
  std::unordered_map<std::string, size_t> where;
  for (const Hyp &h : beam) {
    const std::string k = Key(h.prefix, true);
    auto it = where.find(k);
    if (it == where.end()) {
      where.emplace(k, finals.size());
      finals.push_back(h);
    } else {
      finals[it->second].ac = LogAdd(finals[it->second].ac, h.ac);
    }
  }
  BeamResult best;
  best.score = kNegInf;
  bool have = false;
  for (const Hyp &h : finals) {
    const double s = Fused(h, fp);
    if (!have || s > best.score) best = {h.prefix, s}, have = true;
  }
  const std::vector<int> gpath = GreedyPath(logits);
  const TokenSequence greedy = CollapsePath(gpath);
  const double gscore = FusedPathScore(logits, gpath, lm, fp);
  if (greedy == best.tokens) {
    best.score = std::max(best.score, gscore);
  } else if (gscore > best.score) {
    best = {greedy, gscore};
  }
  return best;
}

std::string DecodeText(const Tensor &logits, const CharNgramLm *lm, const FusionParams &fp) {
  return Decode(BeamDecodeFused(logits, lm, fp).tokens);
}

TuneFusionResult TuneFusion(const std::vector<DevItem> &dev, const CharNgramLm &lm, const TuneFusionOptions &opt) {
  if (dev.empty()) throw std::invalid_argument("TuneFusion: empty dev set");
  if (opt.trials < 1) throw std::invalid_argument("TuneFusion: trials must be >= 1");
  std::vector<std::pair<double, double>> cands;
  if (opt.include_baseline) cands.emplace_back(0.0, 0.0);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> lam(0.0, 1.0), beta(-1.0, 1.0);
  for (int i = 0; i < opt.trials; ++i) {
    const double l = lam(rng);
    const double b = beta(rng);
    cands.emplace_back(l, b);
  }
  std::vector<std::string> refs;
  for (const auto &d : dev) refs.push_back(d.reference);
  TuneFusionResult res;
  for (const auto &[l, b] : cands) {
    FusionParams fp{l, b, opt.beam_width};
    std::vector<std::string> hyps;
    hyps.reserve(dev.size());
    for (const auto &d : dev) hyps.push_back(DecodeText(d.logits, &lm, fp));
    const double w = Wer(refs, hyps);
    res.trials.push_back({l, b, w});
    if (res.trials.size() == 1 || w < res.best_wer) {
      res.best = fp;
      res.best_wer = w;
    }
  }
  return res;
}

}  // namespace sslab
