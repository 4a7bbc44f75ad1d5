// include/sslab/audio/waveform.h

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

#ifndef SSLAB_AUDIO_WAVEFORM_H_
#define SSLAB_AUDIO_WAVEFORM_H_

#include <cstdint>
#include <string>
#include <vector>

namespace sslab {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<int16_t> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / kSampleRate; }
};

// RIFF/WAVE, mono, PCM16, 16 kHz only.  Anything else is rejected.
void WriteWav(const Waveform &w, const std::string &path);
Waveform ReadWav(const std::string &path);

}  // namespace sslab

#endif  // SSLAB_AUDIO_WAVEFORM_H_
