// include/sslab/audio/logmel.h

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

#ifndef SSLAB_AUDIO_LOGMEL_H_
#define SSLAB_AUDIO_LOGMEL_H_

#include <memory>
#include <vector>

#include "sslab/audio/waveform.h"
#include "sslab/numerics/tensor.h"

namespace sslab {

inline constexpr int kNumMelBins = 80;
inline constexpr int kWindowSamples = 400;  // 25 ms
inline constexpr int kHopSamples = 160;     // 10 ms
inline constexpr int kFftSize = 512;
inline constexpr double kMelLowHz = 125.0;
inline constexpr double kMelHighHz = 7600.0;
inline constexpr double kLogFloor = 1e-6;

struct Spectrogram {
  int num_frames = 0;
  std::vector<double> frames;  // num_frames x kNumMelBins, row-major
  int frame_shift_ms = 10;
  int frame_length_ms = 25;

  double at(int t, int m) const { return frames[static_cast<size_t>(t) * kNumMelBins + m]; }
  double &at(int t, int m) { return frames[static_cast<size_t>(t) * kNumMelBins + m]; }
  Tensor ToTensor() const;
  static Spectrogram FromTensor(const Tensor &t);
};

int NumFrames(size_t num_samples);

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular HTK-style filters, unit peak, over FFT bins 0..kFftSize/2.
// Row m holds the weights of filter m.
std::vector<std::vector<double>> MelFilterbank();

// Owns the FFT plan and filterbank; Compute is safe to call concurrently.
class LogMelExtractor {
 public:
  LogMelExtractor();
  ~LogMelExtractor();
  LogMelExtractor(const LogMelExtractor &) = delete;
  LogMelExtractor &operator=(const LogMelExtractor &) = delete;

  // Throws std::invalid_argument if w is shorter than one window.
  Spectrogram Compute(const Waveform &w) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Spectrogram LogMel(const Waveform &w);

}  // namespace sslab

#endif  // SSLAB_AUDIO_LOGMEL_H_
