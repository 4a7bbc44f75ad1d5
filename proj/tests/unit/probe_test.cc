// tests/unit/probe_test.cc

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
#include <numeric>
#include <random>

#include "doctest.h"
#include "gradcheck.h"
#include "sslab/audio/synth.h"
#include "sslab/probe/probe.h"

using namespace sslab;
using sslab::testing::CheckGradients;
using sslab::testing::RandomTensor;

namespace {

struct Blobs {
  FeatureRows x;
  std::vector<int> y;
};

// Gaussian blobs centred at `sep` times a class-specific unit vector.
Blobs MakeBlobs(const std::vector<int> &counts, int d, double sep, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Blobs b;
  for (size_t c = 0; c < counts.size(); ++c)
    for (int i = 0; i < counts[c]; ++i) {
      std::vector<double> v(d);
      for (int j = 0; j < d; ++j) v[j] = n01(rng) + (j == static_cast<int>(c) ? sep : 0.0);
      b.x.push_back(v);
      b.y.push_back(static_cast<int>(c));
    }
  return b;
}

ConformerConfig Tiny() {
  ConformerConfig c;
  c.num_layers = 2;
  c.model_dim = 16;
  c.attention_heads = 4;
  c.subsample_channels = 4;
  return c;
}

Spectrogram Clip(uint64_t seed) {
  return NormalizeFeatures(LogMel(SynthUtterance("ab", seed, 0.05, SpeakerProfile(0))));
}

// n! orderings of a vector, lexicographic.
std::vector<std::vector<int>> Permutations(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Exact AP as a reduced fraction: mean over positives of hits / rank.
std::pair<int64_t, int64_t> RationalAp(const std::vector<int> &ranked_labels) {
  int64_t num = 0, den = 1, hits = 0;
  for (size_t r = 0; r < ranked_labels.size(); ++r) {
    if (!ranked_labels[r]) continue;
    ++hits;
    const int64_t rank = static_cast<int64_t>(r + 1);
    num = num * rank + hits * den;
    den *= rank;
    const int64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
  }
  den *= hits;
  const int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

}  // namespace

TEST_CASE("pooling: constant, single frame, duplicates, layer range") {
  const auto v = MeanPool(Tensor::Filled({7, 5}, 0.25));
  for (double x : v) CHECK(x == 0.25);
  const Tensor one = Tensor::FromData({1, 3}, {1.0, -2.0, 3.5});
  CHECK(MeanPool(one) == std::vector<double>{1.0, -2.0, 3.5});
  const ConformerConfig cfg = Tiny();
  const ParamStore p = InitConformer(cfg, 3);
  const std::vector<Spectrogram> clips{Clip(1), Clip(2), Clip(1)};
  const auto all = ExtractPooledAllLayers(p, cfg, clips);
  REQUIRE(all.size() == static_cast<size_t>(cfg.num_layers + 2));
  for (int l = -1; l <= cfg.num_layers; ++l) {
    const auto f = ExtractPooled(p, cfg, clips, l);
    REQUIRE(f.size() == 3);
    CHECK(f[0].size() == static_cast<size_t>(cfg.model_dim));
    CHECK(f[0] == f[2]);
    CHECK(f == all[l + 1]);
  }
  CHECK_THROWS_AS(ExtractPooled(p, cfg, clips, -2), std::invalid_argument);
  CHECK_THROWS_AS(ExtractPooled(p, cfg, clips, cfg.num_layers + 1), std::invalid_argument);
}

TEST_CASE("probe: separable blobs are classified by every method") {
  const Blobs train = MakeBlobs({100, 100}, 8, 6.0, 1), test = MakeBlobs({100, 100}, 8, 6.0, 2);
  for (ProbeMethod m : kProbeMethods) {
    const LinearProbe p = TrainProbe(train.x, train.y, 2, m);
    INFO(ToString(m));
    CHECK(Accuracy(p, test.x, test.y) >= 0.99);
  }
}

TEST_CASE("probe: labels independent of features stay near chance") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  auto make = [&](int n) {
    Blobs b;
    for (int i = 0; i < n; ++i) {
      std::vector<double> v(8);
      for (double &x : v) x = n01(rng);
      b.x.push_back(v);
      b.y.push_back(i % 2);
    }
    return b;
  };
  const Blobs train = make(200), dev = make(400);
  for (ProbeMethod m : kProbeMethods) {
    INFO(ToString(m));
    CHECK(std::abs(Accuracy(TrainProbe(train.x, train.y, 2, m), dev.x, dev.y) - 0.5) <= 0.1);
  }
}

TEST_CASE("probe: balanced logistic recovers the minority class") {
  const Blobs train = MakeBlobs({450, 50}, 4, 3.0, 4), test = MakeBlobs({900, 100}, 4, 3.0, 5);
  const LinearProbe bal = TrainProbe(train.x, train.y, 2, ProbeMethod::kBalancedLogistic);
  const LinearProbe plain = TrainProbe(train.x, train.y, 2, ProbeMethod::kLogistic);
  CHECK(Recall(bal, test.x, test.y, 1) >= 0.95);
  CHECK(Recall(bal, test.x, test.y, 1) >= Recall(plain, test.x, test.y, 1));
}

TEST_CASE("probe: errors") {
  const Blobs b = MakeBlobs({10, 10}, 3, 2.0, 6);
  CHECK_THROWS_AS(TrainProbe(b.x, b.y, 3, ProbeMethod::kLda), std::invalid_argument);
  CHECK_THROWS_AS(TrainProbe(b.x, b.y, 1, ProbeMethod::kLda), std::invalid_argument);
  CHECK_THROWS_AS(TrainProbe(b.x, std::vector<int>(20, 5), 2, ProbeMethod::kLogistic), std::invalid_argument);
  CHECK_THROWS_AS(ProbeMethodFromString("svm"), std::invalid_argument);
  for (ProbeMethod m : kProbeMethods) CHECK(ProbeMethodFromString(ToString(m)) == m);
}

TEST_CASE("probe: LDA predictions survive scaling the features by 10") {
  const Blobs train = MakeBlobs({60, 60, 60}, 6, 1.5, 7), test = MakeBlobs({60, 60, 60}, 6, 1.5, 8);
  auto scaled = [](FeatureRows x) {
    for (auto &r : x)
      for (double &v : r) v *= 10.0;
    return x;
  };
  const LinearProbe a = TrainProbe(train.x, train.y, 3, ProbeMethod::kLda);
  const LinearProbe b = TrainProbe(scaled(train.x), train.y, 3, ProbeMethod::kLda);
  const FeatureRows st = scaled(test.x);
  for (size_t i = 0; i < test.x.size(); ++i) CHECK(a.Predict(test.x[i]) == b.Predict(st[i]));
}

TEST_CASE("select_best: single entry, ties and argmax") {
  using M = ProbeMethod;
  CHECK(SelectBest({{2, M::kLda, 0.5, 0.4}}) == ProbeEntry{2, M::kLda, 0.5, 0.4});
  CHECK(SelectBest({{3, M::kLogistic, 0.8, 0.1}, {1, M::kLda, 0.8, 0.2}}).layer == 1);
  CHECK(SelectBest({{1, M::kLda, 0.8, 0.1}, {1, M::kBalancedLogistic, 0.8, 0.2}}).method == M::kBalancedLogistic);
  CHECK_THROWS_AS(SelectBest({}), std::invalid_argument);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> acc(0, 10), layer(-1, 4), meth(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ProbeEntry> t;
    for (int i = 0; i < 8; ++i) t.push_back({layer(rng), kProbeMethods[meth(rng)], acc(rng) / 10.0, acc(rng) / 10.0});
    const ProbeEntry best = SelectBest(t);
    for (const auto &e : t) CHECK(best.dev_accuracy >= e.dev_accuracy);
    // Strictly monotone rescaling of dev accuracy keeps the choice.
    auto t2 = t;
    for (auto &e : t2) e.dev_accuracy = std::exp(3.0 * e.dev_accuracy) - 7.0;
    const ProbeEntry b2 = SelectBest(t2);
    CHECK(b2.layer == best.layer);
    CHECK(b2.method == best.method);
    CHECK(b2.test_accuracy == best.test_accuracy);
  }
}

TEST_CASE("average_accuracy: means, symmetry and coverage") {
  CHECK(AverageAccuracy({{"a", {{-1, 0.3}, {0, 0.6}, {1, 0.9}}}}, 1) ==
        std::map<int, double>{{-1, 0.3}, {0, 0.6}, {1, 0.9}});
  const auto two = AverageAccuracy({{"a", {{-1, 0.6}, {0, 0.6}}}, {"b", {{-1, 0.8}, {0, 0.2}}}}, 0);
  CHECK(two.at(-1) == doctest::Approx(0.7));
  CHECK(two.at(0) == doctest::Approx(0.4));
  CHECK(AverageAccuracy({{"b", {{-1, 0.8}, {0, 0.2}}}, {"a", {{-1, 0.6}, {0, 0.6}}}}, 0) == two);
  CHECK_THROWS_AS(AverageAccuracy({{"a", {{-1, 0.6}, {1, 0.6}}}}, 1), std::invalid_argument);
  CHECK_THROWS_AS(AverageAccuracy({}, 1), std::invalid_argument);
}

TEST_CASE("run_probe: table covers every layer and method") {
  const ConformerConfig cfg = Tiny();
  const ParamStore p = InitConformer(cfg, 4);
  auto split = [&](int n, uint64_t seed) {
    ProbeSplit s;
    std::vector<Spectrogram> clips;
    for (int i = 0; i < n; ++i) {
      const int c = i % 2;
      clips.push_back(NormalizeFeatures(LogMel(SynthUtterance(c ? "mm" : "ee", seed + i, 0.05, SpeakerProfile(i % 3)))));
      s.labels.push_back(c);
    }
    s.features = ExtractPooledAllLayers(p, cfg, clips);
    return s;
  };
  ProbeTask task{"vowel", 2, split(16, 100), split(8, 200), split(8, 300)};
  const ProbeReport r = RunProbe({task}, cfg.num_layers);
  const auto &t = r.tasks.at("vowel");
  CHECK(t.table.size() == static_cast<size_t>((cfg.num_layers + 2) * 3));
  CHECK(t.selected == SelectBest(t.table));
  REQUIRE(r.average_accuracy.size() == static_cast<size_t>(cfg.num_layers + 2));
  int expect = -1;
  for (const auto &[l, v] : r.average_accuracy) CHECK(l == expect++);
  const std::string js = ProbeReportToJson(r);
  CHECK(js.find("\"selected\"") != std::string::npos);
}

TEST_CASE("mlp head: gradients match finite differences") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const int d = 3 + seed % 3, c = 1 + seed % 3;
    const ParamStore init = InitMlpHead(d, 512, c, seed);
    std::vector<MultiLabelClip> clips;
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < 2; ++i) {
      MultiLabelClip clip{"c" + std::to_string(i), RandomTensor({2 + i, d}, rng), std::vector<int>(c)};
      for (int &v : clip.targets) v = coin(rng);
      clips.push_back(clip);
    }
    const auto names = init.Names();
    const auto r = CheckGradients(
        [&](const std::vector<Tensor> &v) {
          ParamStore p;
          for (size_t i = 0; i < names.size(); ++i) p.Set(names[i], v[i]);
          return MlpHeadLoss(p, clips);
        },
        init.Tensors(names), 1e-5, 32, seed);
    INFO(r.worst);
    CHECK(r.max_rel_err <= 1e-4);
  }
}

TEST_CASE("mlp head: overfits ten clips; an all-negative class goes to zero") {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.5);
  std::vector<MultiLabelClip> clips;
  for (int i = 0; i < 10; ++i) {
    MultiLabelClip clip{"clip" + std::to_string(i), RandomTensor({4, 6}, rng), {0, 0, 0}};
    clip.targets[0] = coin(rng);
    clip.targets[1] = coin(rng);
    clips.push_back(clip);
  }
  MlpHeadConfig cfg;
  cfg.epochs = 400;
  cfg.learning_rate = 3e-3;
  std::vector<double> log;
  const MultiLabelHead head = TrainMlpHead(clips, 3, cfg, &log);
  REQUIRE(log.size() == 400);
  MESSAGE("frame loss " << log.front() << " -> " << MlpHeadLoss(head.params, clips).item());
  CHECK(MlpHeadLoss(head.params, clips).item() < 0.01);
  for (const auto &c : clips) {
    const auto s = head.ClipScores(c.frames);
    for (double v : s) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
    CHECK(s[2] < 0.1);
  }
  CHECK_THROWS_AS(TrainMlpHead(clips, 0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(TrainMlpHead(clips, 2, cfg), std::invalid_argument);
}

TEST_CASE("ap: hand examples") {
  CHECK(AveragePrecision({0.9, 0.8, 0.2, 0.1}, {0, 1, 0, 0}, {"a", "b", "c", "d"}) == 0.5);
  const auto perfect = MeanAveragePrecision({"a", "b", "c"}, {{0.9, 0.1}, {0.2, 0.8}, {0.1, 0.7}},
                                            {{1, 0}, {0, 1}, {0, 1}});
  CHECK(perfect.map == 1.0);
  // Equal scores fall back to id order.
  CHECK(AveragePrecision({0.5, 0.5}, {1, 0}, {"b", "a"}) == 0.5);
  CHECK(AveragePrecision({0.5, 0.5}, {1, 0}, {"a", "b"}) == 1.0);
  const auto ex = MeanAveragePrecision({"a", "b"}, {{0.1, 0.3}, {0.2, 0.4}}, {{1, 0}, {0, 0}});
  CHECK(ex.excluded == std::vector<int>{1});
  CHECK(std::isnan(ex.per_class[1]));
  CHECK(ex.map == 0.5);
  CHECK_THROWS_AS(MeanAveragePrecision({"a"}, {{0.1}}, {{0}}), std::invalid_argument);
}

TEST_CASE("ap: every ranking of up to six clips matches the exact fraction") {
  int64_t checked = 0;
  for (int n = 1; n <= 6; ++n) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back(std::string(1, static_cast<char>('a' + i)));
    for (int mask = 1; mask < (1 << n); ++mask) {
      std::vector<int> labels(n);
      for (int i = 0; i < n; ++i) labels[i] = (mask >> i) & 1;
      double min_ap = 2.0;
      for (const auto &perm : Permutations(n)) {
        // perm[i] is the rank of clip i.
        std::vector<double> scores(n);
        std::vector<int> ranked(n);
        for (int i = 0; i < n; ++i) {
          scores[i] = 1.0 - 0.1 * perm[i];
          ranked[perm[i]] = labels[i];
        }
        const auto [num, den] = RationalAp(ranked);
        const double got = AveragePrecision(scores, labels, ids);
        CHECK(got == static_cast<double>(num) / static_cast<double>(den));
        // Strictly monotone transforms of the scores change nothing.
        std::vector<double> warped(n);
        for (int i = 0; i < n; ++i) warped[i] = std::exp(5.0 * scores[i]) - 3.0;
        CHECK(AveragePrecision(warped, labels, ids) == got);
        min_ap = std::min(min_ap, got);
        ++checked;
      }
      // Inverting a perfect ranker: positives occupy the last p ranks.
      std::vector<double> inverted(n);
      for (int i = 0; i < n; ++i) inverted[i] = labels[i] ? -1.0 - i : 1.0 + i;
      CHECK(AveragePrecision(inverted, labels, ids) == min_ap);
    }
  }
  CHECK(checked > 20000);
}
