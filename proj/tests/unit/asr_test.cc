// tests/unit/asr_test.cc

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "doctest.h"
#include "gradcheck.h"
#include "sslab/asr/ctc.h"
#include "sslab/asr/decode.h"
#include "sslab/asr/lm.h"
#include "sslab/asr/train.h"
#include "sslab/asr/wer.h"
#include "sslab/audio/synth.h"
#include "sslab/numerics/ops.h"

using namespace sslab;
using sslab::testing::CheckGradients;
using sslab::testing::RandomTensor;

namespace {

// Every frame path of length T over V symbols, with its probability.
template <typename F>
void ForEachPath(int T, int V, F f) {
  std::vector<int> path(T, 0);
  while (true) {
    f(path);
    int i = T - 1;
    while (i >= 0 && ++path[i] == V) path[i--] = 0;
    if (i < 0) return;
  }
}

std::vector<double> Probs(const Tensor &logits) {
  const int64_t T = logits.rows(), V = logits.cols();
  std::vector<double> p(T * V);
  for (int64_t t = 0; t < T; ++t) {
    double z = 0;
    for (int64_t k = 0; k < V; ++k) z += std::exp(logits.at(t, k));
    for (int64_t k = 0; k < V; ++k) p[t * V + k] = std::exp(logits.at(t, k)) / z;
  }
  return p;
}

// Exhaustive oracle: probability mass of every collapsed string.
std::map<TokenSequence, double> StringMass(const Tensor &logits) {
  const int T = static_cast<int>(logits.rows()), V = static_cast<int>(logits.cols());
  const auto p = Probs(logits);
  std::map<TokenSequence, double> mass;
  ForEachPath(T, V, [&](const std::vector<int> &path) {
    double pr = 1.0;
    for (int t = 0; t < T; ++t) pr *= p[t * V + path[t]];
    mass[CollapsePath(path)] += pr;
  });
  return mass;
}

Tensor Lattice(const std::vector<std::vector<double>> &probs) {
  std::vector<double> v;
  for (const auto &row : probs)
    for (double x : row) v.push_back(std::log(x));
  return Tensor::FromData({static_cast<int64_t>(probs.size()), static_cast<int64_t>(probs[0].size())}, v);
}

}  // namespace

TEST_CASE("ctc: single frame, uniform logits") {
  const auto r = CtcLoss(Tensor::Zeros({1, 2}), {1});
  CHECK(r.feasible);
  CHECK(r.loss.item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("ctc: matches exhaustive alignment sums") {
  std::mt19937_64 rng(1);
  int cases = 0;
  for (int trial = 0; trial < 320; ++trial) {
    const int T = 1 + trial % 6, V = 2 + trial % 3;
    const Tensor logits = RandomTensor({T, V}, rng, 1.5);
    std::uniform_int_distribution<int> len(0, 3), id(1, V - 1);
    TokenSequence y(len(rng));
    for (int &k : y) k = id(rng);
    const auto mass = StringMass(logits);
    const auto r = CtcLoss(logits, y);
    if (CtcMinFrames(y) > T) {
      CHECK_FALSE(r.feasible);
      CHECK(std::isinf(r.loss.item()));
      CHECK(mass.count(y) == 0);
      continue;
    }
    ++cases;
    const double want = -std::log(mass.at(y));
    CHECK(std::abs(r.loss.item() - want) <= 1e-6 * std::abs(want) + 1e-15);
  }
  CHECK(cases >= 200);
}

TEST_CASE("ctc: infeasible targets are flagged with zero gradient") {
  const Tensor logits = Tensor::FromData({2, 3}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, true);
  const auto r = CtcLoss(logits, {1, 1});  // needs 3 frames
  CHECK_FALSE(r.feasible);
  CHECK(std::isinf(r.loss.item()));
  std::vector<Tensor> params{logits};
  const auto g = Backward(r.loss, params).of(logits);
  for (double v : g.values()) CHECK(v == 0.0);
  CHECK(CtcLoss(logits, {1, 2}).feasible);
  CHECK_THROWS_AS(CtcLoss(logits, {0}), std::invalid_argument);
  CHECK_THROWS_AS(CtcLoss(logits, {3}), std::invalid_argument);
}

TEST_CASE("ctc: gradients match finite differences") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const int T = 3 + seed % 5, V = 4 + seed % 3;
    std::uniform_int_distribution<int> id(1, V - 1);
    TokenSequence y(1 + seed % 3);
    for (int &k : y) k = id(rng);
    const auto r = CheckGradients([&](const std::vector<Tensor> &v) { return CtcLoss(v[0], y).loss; },
                                  {RandomTensor({T, V}, rng)}, 1e-5, 64, seed);
    INFO(r.worst);
    CHECK(r.max_rel_err <= 1e-4);
  }
}

TEST_CASE("greedy: collapse rules") {
  auto onehot = [](std::vector<int> path, int V) {
    std::vector<double> v(path.size() * V, 0.0);
    for (size_t t = 0; t < path.size(); ++t) v[t * V + path[t]] = 5.0;
    return Tensor::FromData({static_cast<int64_t>(path.size()), V}, v);
  };
  CHECK(GreedyDecode(onehot({0, 1, 1, 0, 2}, 3)) == TokenSequence{1, 2});
  CHECK(GreedyDecode(onehot({0, 0, 0}, 3)).empty());
  CHECK(GreedyDecode(onehot({1, 0, 1}, 3)) == TokenSequence{1, 1});
}

TEST_CASE("lm: conditionals sum to one") {
  CharNgramLm lm(4, 0.1);
  lm.Train({"the cat sat", "a dog", "the mat"});
  for (const std::string ctx : {"", "t", "th", "the ", "zzz", "at"}) {
    const TokenSequence h = Encode(ctx);
    double s = 0;
    for (int k = 1; k < kVocabSize; ++k) s += std::exp(lm.LogProb(h, k));
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  CHECK(lm.LogProb(Encode("th"), GraphemeId('e')) > lm.LogProb(Encode("th"), GraphemeId('q')));
}

TEST_CASE("beam: lambda=0, beta=0, beam=1 equals greedy on 100 random lattices") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + trial % 20, V = trial % 2 ? kVocabSize : 3 + trial % 5;
    const Tensor logits = RandomTensor({T, V}, rng, 2.0);
    CHECK(BeamDecodeFused(logits, nullptr, {0.0, 0.0, 1}).tokens == GreedyDecode(logits));
  }
}

TEST_CASE("beam: recovers the exhaustive maximiser where greedy does not") {
  // Per frame: blank 0.6, 'a' 0.4.  Greedy reads "" (0.216); "a" has 0.688.
  const Tensor logits = Lattice({{0.6, 0.4}, {0.6, 0.4}, {0.6, 0.4}});
  const auto mass = StringMass(logits);
  const auto best = std::max_element(mass.begin(), mass.end(), [](auto &a, auto &b) { return a.second < b.second; });
  CHECK(best->first == TokenSequence{1});
  CHECK(best->second == doctest::Approx(0.688).epsilon(1e-12));
  CHECK(GreedyDecode(logits).empty());
  const auto r = BeamDecodeFused(logits, nullptr, {0.0, 0.0, 4});
  CHECK(r.tokens == best->first);
  CHECK(std::exp(r.score) == doctest::Approx(0.688).epsilon(1e-12));
}

TEST_CASE("beam: wide beams find the exhaustive maximiser on small lattices") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    const int T = 2 + trial % 4, V = 3;
    const Tensor logits = RandomTensor({T, V}, rng, 1.0);
    const auto mass = StringMass(logits);
    double top = 0;
    for (auto &[s, m] : mass) top = std::max(top, m);
    const auto r = BeamDecodeFused(logits, nullptr, {0.0, 0.0, 64});
    CHECK(mass.at(r.tokens) == doctest::Approx(top).epsilon(1e-12));
  }
}

TEST_CASE("beam: output score never falls below the greedy path score") {
  CharNgramLm lm;
  lm.Train({"the cat", "a dog sat", "red fox"});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lam(0, 1), bet(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor logits = RandomTensor({1 + trial % 15, kVocabSize}, rng, 2.0);
    const FusionParams fp{lam(rng), bet(rng), 1 + trial % 6};
    const auto r = BeamDecodeFused(logits, &lm, fp);
    CHECK(r.score >= FusedPathScore(logits, GreedyPath(logits), &lm, fp) - 1e-12);
  }
}

TEST_CASE("beam: reward extremes") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int T = 1 + trial % 10;
    const Tensor logits = RandomTensor({T, 6}, rng, 1.0);
    CHECK(static_cast<int>(BeamDecodeFused(logits, nullptr, {0.0, 1e6, 4}).tokens.size()) == T);
    CHECK(BeamDecodeFused(logits, nullptr, {0.0, -1e6, 4}).tokens.empty());
  }
  CHECK_THROWS_AS(BeamDecodeFused(Tensor::Zeros({2, 3}), nullptr, {0.0, 0.0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(BeamDecodeFused(Tensor::Zeros({2, 3}), nullptr, {0.5, 0.0, 2}), std::invalid_argument);
}

TEST_CASE("wer: examples and enumeration oracle") {
  CHECK(Wer({"a b c", "d"}, {"a b c", "d"}) == 0.0);
  CHECK(Wer({"a b c"}, {"a x c"}) == doctest::Approx(1.0 / 3));
  CHECK(Wer({"a b c d"}, {""}) == 1.0);
  CHECK_THROWS_AS(Wer({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(Wer({""}, {"a"}), std::invalid_argument);
  CHECK_THROWS_AS(Wer({"a"}, {"a", "b"}), std::invalid_argument);
  // Oracle: minimum over all edit scripts by exhaustive recursion.
  std::function<int(std::vector<std::string>, std::vector<std::string>)> brute =
      [&](std::vector<std::string> r, std::vector<std::string> h) -> int {
    if (r.empty()) return static_cast<int>(h.size());
    if (h.empty()) return static_cast<int>(r.size());
    const std::vector<std::string> r1(r.begin() + 1, r.end()), h1(h.begin() + 1, h.end());
    return std::min({brute(r1, h) + 1, brute(r, h1) + 1, brute(r1, h1) + (r[0] == h[0] ? 0 : 1)});
  };
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> len(0, 6), w(0, 3);
  const char *words[] = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> r(len(rng)), h(len(rng));
    for (auto &x : r) x = words[w(rng)];
    for (auto &x : h) x = words[w(rng)];
    auto join = [](const std::vector<std::string> &v) {
      std::string s;
      for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + v[i];
      return s;
    };
    CHECK(WordEditDistance(join(r), join(h)) == brute(r, h));
  }
}

TEST_CASE("wer: permutation symmetry and duplication invariance") {
  const std::vector<std::string> refs{"the cat sat", "a dog", "red fox jumps"};
  const std::vector<std::string> hyps{"the cat", "a dog dog", "red box jumps"};
  const double w = Wer(refs, hyps);
  CHECK(Wer({refs[2], refs[0], refs[1]}, {hyps[2], hyps[0], hyps[1]}) == w);
  std::vector<std::string> r2 = refs, h2 = hyps;
  r2.insert(r2.end(), refs.begin(), refs.end());
  h2.insert(h2.end(), hyps.begin(), hyps.end());
  CHECK(Wer(r2, h2) == w);
}

TEST_CASE("tune_fusion: baseline, single trial, determinism") {
  CharNgramLm lm;
  lm.Train({"the cat", "a dog", "red fox", "the dog"});
  std::mt19937_64 rng(7);
  std::vector<DevItem> dev;
  for (const char *ref : {"the cat", "a dog", "red fox"})
    dev.push_back({RandomTensor({12, kVocabSize}, rng, 2.0), ref});
  TuneFusionOptions o;
  o.trials = 6;
  o.seed = 3;
  o.beam_width = 4;
  const auto a = TuneFusion(dev, lm, o);
  REQUIRE(a.trials.size() == 7);
  CHECK(a.trials[0].fusion_weight == 0.0);
  CHECK(a.trials[0].non_blank_reward == 0.0);
  CHECK(a.best_wer <= a.trials[0].wer);
  for (const auto &t : a.trials) {
    CHECK(a.best_wer <= t.wer);
    CHECK(t.fusion_weight >= 0.0);
    CHECK(t.fusion_weight <= 1.0);
    CHECK(t.non_blank_reward >= -1.0);
    CHECK(t.non_blank_reward <= 1.0);
  }
  const auto b = TuneFusion(dev, lm, o);
  CHECK(b.best.fusion_weight == a.best.fusion_weight);
  CHECK(b.best.non_blank_reward == a.best.non_blank_reward);
  o.trials = 1;
  o.include_baseline = false;
  const auto one = TuneFusion(dev, lm, o);
  REQUIRE(one.trials.size() == 1);
  CHECK(one.best.fusion_weight == one.trials[0].fusion_weight);
  CHECK(one.best.non_blank_reward == one.trials[0].non_blank_reward);
  CHECK_THROWS_AS(TuneFusion({}, lm, o), std::invalid_argument);
  o.trials = 0;
  CHECK_THROWS_AS(TuneFusion(dev, lm, o), std::invalid_argument);
}

namespace {

std::vector<Utterance> SynthSet(int n, uint64_t seed) {
  CorpusSpec spec;
  spec.num_utterances = n;
  spec.seed = seed;
  spec.max_words = 2;
  std::vector<Utterance> out;
  for (const auto &it : GenerateCorpusItems(spec))
    out.push_back({it.id, NormalizeFeatures(LogMel(Render(it))), it.transcript});
  return out;
}

ConformerConfig SmallEncoder() {
  ConformerConfig c;
  c.num_layers = 2;
  c.model_dim = 32;
  c.attention_heads = 4;
  c.subsample_channels = 8;
  return c;
}

}  // namespace

TEST_CASE("train_supervised: overfits 8 utterances to zero WER") {
  const auto data = SynthSet(8, 21);
  FinetuneConfig fc;
  fc.encoder = SmallEncoder();
  fc.steps = 2000;
  fc.batch_size = 8;
  fc.use_augment = false;
  fc.encoder.dropout = 0.0;
  fc.ema_decay = 0.99;
  fc.encoder_schedule = {2e-3, 200, LrScheduleKind::kConstantWithWarmup};
  fc.decoder_schedule = fc.encoder_schedule;
  fc.eval_every = 500;
  const auto r = RunFinetune(fc, PrepareInit(fc, nullptr), ShuffledBatches(data, 8, 1), data);
  MESSAGE("train WER after 2000 steps: " << r.final_dev_wer);
  CHECK(r.final_dev_wer == 0.0);
  // Logging contract.
  REQUIRE(r.log.loss.size() == 2000);
  for (size_t i = 0; i < r.log.loss.size(); ++i) CHECK(r.log.loss[i].first == static_cast<int64_t>(i + 1));
  REQUIRE(r.log.dev_wer.size() == 4);
  for (size_t i = 1; i < r.log.dev_wer.size(); ++i) CHECK(r.log.dev_wer[i].first > r.log.dev_wer[i - 1].first);
}

TEST_CASE("train_supervised: mismatched checkpoints fail before training") {
  FinetuneConfig fc;
  fc.encoder = SmallEncoder();
  Checkpoint ck;
  ConformerConfig other = fc.encoder;
  other.model_dim = 64;
  ck.flags = kCheckpointEncoderOnly;
  ck.metadata = std::string("{\"encoder\":") + ConformerConfigToJson(other) + "}";
  ParamStore enc;
  enc.Merge(InitConformer(other, 1), "encoder/");
  ck.PutParams("param", enc);
  fc.init = InitMode::kEncoderPretrained;
  try {
    PrepareInit(fc, &ck);
    FAIL("expected mismatch");
  } catch (const std::invalid_argument &e) {
    CHECK(std::string(e.what()).find("model_dim") != std::string::npos);
  }
  CHECK_THROWS_AS(PrepareInit(fc, nullptr), std::invalid_argument);
  fc.init = InitMode::kFull;
  ck.metadata = std::string("{\"encoder\":") + ConformerConfigToJson(fc.encoder) + "}";
  CHECK_THROWS_AS(PrepareInit(fc, &ck), std::invalid_argument);
}

TEST_CASE("train_supervised: encoder-pretrained init keeps encoder, refreshes decoder") {
  FinetuneConfig fc;
  fc.encoder = SmallEncoder();
  const ParamStore src = InitAsrModel(fc.encoder, 77);
  Checkpoint ck;
  ck.flags = kCheckpointEncoderOnly;
  ck.metadata = std::string("{\"encoder\":") + ConformerConfigToJson(fc.encoder) + "}";
  ParamStore enc;
  enc.Merge(src, "encoder/");
  ck.PutParams("param", enc);
  fc.init = InitMode::kEncoderPretrained;
  const ParamStore p = PrepareInit(fc, &ck);
  for (const auto &name : enc.Names()) {
    const auto &a = p.Get(name).values();
    const auto &b = enc.Get(name).values();
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-6));
  }
  CHECK(p.Get("decoder/out/w").values() != src.Get("decoder/out/w").values());
  CHECK(p.Get("decoder/out/w").requires_grad());
}

TEST_CASE("train_supervised: identical configs give identical runs") {
  const auto data = SynthSet(4, 22);
  FinetuneConfig fc;
  fc.encoder = SmallEncoder();
  fc.steps = 4;
  fc.batch_size = 2;
  const auto a = RunFinetune(fc, PrepareInit(fc, nullptr), ShuffledBatches(data, 2, 1), data);
  const auto b = RunFinetune(fc, PrepareInit(fc, nullptr), ShuffledBatches(data, 2, 1), data);
  CHECK(a.log.loss == b.log.loss);
  CHECK(a.log.dev_wer == b.log.dev_wer);
}
