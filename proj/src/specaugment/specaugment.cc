// src/specaugment/specaugment.cc

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

#include "sslab/specaugment/specaugment.h"

#include <cmath>
#include <random>
#include <stdexcept>

namespace sslab {

void AugmentPolicy::Validate() const {
  if (freq_mask_count < 0 || time_mask_count < 0) throw std::invalid_argument("mask counts must be >= 0");
  if (freq_mask_param < 0 || freq_mask_param > kNumMelBins)
    throw std::invalid_argument("freq_mask_param must lie in [0, 80]");
  if (!(max_time_mask_ratio >= 0.0 && max_time_mask_ratio <= 1.0))
    throw std::invalid_argument("max_time_mask_ratio must lie in [0, 1]");
}

Spectrogram ApplySpecAugment(const Spectrogram &s, const AugmentPolicy &p, uint64_t seed,
                             std::vector<MaskRegion> *regions) {
  p.Validate();
  if (s.num_frames < 1) throw std::invalid_argument("ApplySpecAugment: empty spectrogram");
  Spectrogram out = s;
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  for (int i = 0; i < p.freq_mask_count; ++i) {
    const int w = uniform(0, p.freq_mask_param);
    const int f0 = uniform(0, kNumMelBins - w);
    for (int t = 0; t < out.num_frames; ++t)
      for (int m = f0; m < f0 + w; ++m) out.at(t, m) = 0.0;
    if (regions) regions->push_back({MaskRegion::Axis::kFrequency, f0, w});
  }
  const int T = out.num_frames;
  const int max_w = static_cast<int>(std::floor(p.max_time_mask_ratio * T));
  for (int i = 0; i < p.time_mask_count; ++i) {
    const int w = uniform(0, max_w);
    const int t0 = uniform(0, T - w);
    for (int t = t0; t < t0 + w; ++t)
      for (int m = 0; m < kNumMelBins; ++m) out.at(t, m) = 0.0;
    if (regions) regions->push_back({MaskRegion::Axis::kTime, t0, w});
  }
  return out;
}

}  // namespace sslab
