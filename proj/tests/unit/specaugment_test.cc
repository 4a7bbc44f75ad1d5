// tests/unit/specaugment_test.cc

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

#include <random>

#include "doctest.h"
#include "sslab/specaugment/specaugment.h"

using namespace sslab;

namespace {

Spectrogram RandomSpec(int T, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(-3.0, 2.0);
  Spectrogram s;
  s.num_frames = T;
  s.frames.resize(static_cast<size_t>(T) * kNumMelBins);
  // Never exactly zero, so masked cells are recognisable.
  for (double &v : s.frames) v = n(rng) + 1e-3;
  return s;
}

}  // namespace

TEST_CASE("specaugment: identity policy") {
  AugmentPolicy p{0, 27, 0, 0.05};
  const auto s = RandomSpec(50, 1);
  CHECK(ApplySpecAugment(s, p, 99).frames == s.frames);
}

TEST_CASE("specaugment: T=10 leaves time masks empty") {
  const auto s = RandomSpec(10, 2);
  for (uint64_t seed = 0; seed < 200; ++seed) {
    std::vector<MaskRegion> r;
    const auto out = ApplySpecAugment(s, AugmentPolicy{}, seed, &r);
    REQUIRE(r.size() == 12);
    for (const auto &m : r)
      if (m.axis == MaskRegion::Axis::kTime) CHECK(m.width == 0);
    // Only whole columns can change.
    for (int f = 0; f < kNumMelBins; ++f) {
      bool any_masked = false, all_masked = true;
      for (int t = 0; t < 10; ++t) {
        const bool z = out.at(t, f) == 0.0;
        any_masked |= z;
        all_masked &= z;
      }
      CHECK(any_masked == all_masked);
    }
  }
}

TEST_CASE("specaugment: mean frequency mask width over 10000 seeds") {
  const auto s = RandomSpec(400, 3);
  double sum = 0;
  int n = 0;
  for (uint64_t seed = 0; seed < 10000; ++seed) {
    std::vector<MaskRegion> r;
    ApplySpecAugment(s, AugmentPolicy{}, seed, &r);
    for (const auto &m : r)
      if (m.axis == MaskRegion::Axis::kFrequency) sum += m.width, ++n;
  }
  CHECK(n == 20000);
  CHECK(std::abs(sum / n - 13.5) <= 0.5);
}

TEST_CASE("specaugment: properties over random inputs") {
  for (uint64_t seed = 0; seed < 300; ++seed) {
    const int T = 1 + static_cast<int>(seed * 7 % 500);
    const auto s = RandomSpec(T, seed + 10);
    const auto copy = s;
    std::vector<MaskRegion> r;
    const auto out = ApplySpecAugment(s, AugmentPolicy{}, seed, &r);
    CHECK(s.frames == copy.frames);
    CHECK(ApplySpecAugment(s, AugmentPolicy{}, seed).frames == out.frames);
    // Rebuild the mask from the reported regions.
    std::vector<char> masked(s.frames.size(), 0);
    int nf = 0, nt = 0;
    int masked_time = 0;
    for (const auto &m : r) {
      if (m.axis == MaskRegion::Axis::kFrequency) {
        ++nf;
        CHECK(m.width >= 0);
        CHECK(m.width <= 27);
        CHECK(m.start >= 0);
        CHECK(m.start + m.width <= kNumMelBins);
        for (int t = 0; t < T; ++t)
          for (int f = m.start; f < m.start + m.width; ++f) masked[t * kNumMelBins + f] = 1;
      } else {
        ++nt;
        CHECK(m.width <= static_cast<int>(std::floor(0.05 * T)));
        CHECK(m.start >= 0);
        CHECK(m.start + m.width <= T);
        masked_time += m.width;
        for (int t = m.start; t < m.start + m.width; ++t)
          for (int f = 0; f < kNumMelBins; ++f) masked[t * kNumMelBins + f] = 1;
      }
    }
    CHECK(nf == 2);
    CHECK(nt == 10);
    CHECK(masked_time <= 0.5 * T);
    size_t bad = 0;
    for (size_t i = 0; i < masked.size(); ++i)
      bad += masked[i] ? out.frames[i] != 0.0 : out.frames[i] != s.frames[i];
    CHECK(bad == 0);
  }
}

TEST_CASE("specaugment: policy validation") {
  const auto s = RandomSpec(20, 4);
  CHECK_THROWS_AS(ApplySpecAugment(s, AugmentPolicy{-1, 27, 10, 0.05}, 1), std::invalid_argument);
  CHECK_THROWS_AS(ApplySpecAugment(s, AugmentPolicy{2, 81, 10, 0.05}, 1), std::invalid_argument);
  CHECK_THROWS_AS(ApplySpecAugment(s, AugmentPolicy{2, 27, 10, 1.5}, 1), std::invalid_argument);
}
