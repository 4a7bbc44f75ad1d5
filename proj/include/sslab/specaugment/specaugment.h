// include/sslab/specaugment/specaugment.h

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

#ifndef SSLAB_SPECAUGMENT_SPECAUGMENT_H_
#define SSLAB_SPECAUGMENT_SPECAUGMENT_H_

#include <cstdint>
#include <vector>

#include "sslab/audio/logmel.h"

namespace sslab {

struct AugmentPolicy {
  int freq_mask_count = 2;
  int freq_mask_param = 27;  // F: widths ~ Uniform{0..F}
  int time_mask_count = 10;
  double max_time_mask_ratio = 0.05;  // p_S: widths ~ Uniform{0..floor(p_S * T)}

  // Throws std::invalid_argument when counts < 0, F outside [0, 80] or
  // p_S outside [0, 1].
  void Validate() const;
};

struct MaskRegion {
  enum class Axis { kFrequency, kTime } axis;
  int start = 0;
  int width = 0;
};

// Returns an augmented copy; masked cells become 0.  Masks may overlap.
// When regions is non-null the sampled masks are appended to it in order.
Spectrogram ApplySpecAugment(const Spectrogram &s, const AugmentPolicy &p, uint64_t seed,
                             std::vector<MaskRegion> *regions = nullptr);

}  // namespace sslab

#endif  // SSLAB_SPECAUGMENT_SPECAUGMENT_H_
