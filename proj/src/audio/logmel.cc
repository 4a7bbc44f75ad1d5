// src/audio/logmel.cc

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

#include "sslab/audio/logmel.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sslab {

namespace {

constexpr int kNumBins = kFftSize / 2 + 1;

// fftw planning touches global state.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Tensor Spectrogram::ToTensor() const {
  return Tensor::FromData({num_frames, kNumMelBins}, frames);
}

Spectrogram Spectrogram::FromTensor(const Tensor &t) {
  if (t.ndim() != 2 || t.cols() != kNumMelBins)
    throw std::invalid_argument("spectrogram tensor must be T x 80, got " + ShapeString(t.shape()));
  Spectrogram s;
  s.num_frames = static_cast<int>(t.rows());
  s.frames.assign(t.values().begin(), t.values().end());
  return s;
}

int NumFrames(size_t num_samples) {
  if (num_samples < static_cast<size_t>(kWindowSamples)) return 0;
  return static_cast<int>((num_samples - kWindowSamples) / kHopSamples + 1);
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> MelFilterbank() {
  const double lo = HzToMel(kMelLowHz), hi = HzToMel(kMelHighHz);
  std::vector<double> edge(kNumMelBins + 2);
  for (int i = 0; i < kNumMelBins + 2; ++i) edge[i] = MelToHz(lo + (hi - lo) * i / (kNumMelBins + 1));
  std::vector<std::vector<double>> fb(kNumMelBins, std::vector<double>(kNumBins, 0.0));
  for (int m = 0; m < kNumMelBins; ++m) {
    const double l = edge[m], c = edge[m + 1], r = edge[m + 2];
    for (int k = 0; k < kNumBins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kFftSize;
      if (f > l && f < c)
        fb[m][k] = (f - l) / (c - l);
      else if (f >= c && f < r)
        fb[m][k] = (r - f) / (r - c);
    }
  }
  return fb;
}

struct LogMelExtractor::Impl {
  fftw_plan plan = nullptr;
  std::vector<double> window;
  // Sparse filterbank: first nonzero bin and weights per filter.
  std::vector<int> first;
  std::vector<std::vector<double>> weights;
};

LogMelExtractor::LogMelExtractor() : impl_(std::make_unique<Impl>()) {
  impl_->window.resize(kWindowSamples);
  for (int i = 0; i < kWindowSamples; ++i)
    impl_->window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kWindowSamples);
  const auto fb = MelFilterbank();
  for (const auto &row : fb) {
    int a = 0, b = kNumBins;
    while (a < kNumBins && row[a] == 0.0) ++a;
    while (b > a && row[b - 1] == 0.0) --b;
    impl_->first.push_back(a);
    impl_->weights.emplace_back(row.begin() + a, row.begin() + b);
  }
  std::lock_guard<std::mutex> lock(PlannerMutex());
  double *in = fftw_alloc_real(kFftSize);
  fftw_complex *out = fftw_alloc_complex(kNumBins);
  impl_->plan = fftw_plan_dft_r2c_1d(kFftSize, in, out, FFTW_ESTIMATE);
  fftw_free(in);
  fftw_free(out);
  if (!impl_->plan) throw std::runtime_error("fftw planning failed");
}

LogMelExtractor::~LogMelExtractor() {
  std::lock_guard<std::mutex> lock(PlannerMutex());
  if (impl_ && impl_->plan) fftw_destroy_plan(impl_->plan);
}

Spectrogram LogMelExtractor::Compute(const Waveform &w) const {
  const int T = NumFrames(w.samples.size());
  if (T < 1)
    throw std::invalid_argument("logmel: waveform has " + std::to_string(w.samples.size()) +
                                " samples, need at least " + std::to_string(kWindowSamples));
  Spectrogram s;
  s.num_frames = T;
  s.frames.assign(static_cast<size_t>(T) * kNumMelBins, 0.0);
  double *in = fftw_alloc_real(kFftSize);
  fftw_complex *out = fftw_alloc_complex(kNumBins);
  std::vector<double> mag(kNumBins);
  for (int t = 0; t < T; ++t) {
    const size_t off = static_cast<size_t>(t) * kHopSamples;
    for (int i = 0; i < kWindowSamples; ++i)
      in[i] = impl_->window[i] * (w.samples[off + i] / 32768.0);
    std::fill(in + kWindowSamples, in + kFftSize, 0.0);
    fftw_execute_dft_r2c(impl_->plan, in, out);
    for (int k = 0; k < kNumBins; ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
    for (int m = 0; m < kNumMelBins; ++m) {
      double e = 0.0;
      const auto &wt = impl_->weights[m];
      for (size_t j = 0; j < wt.size(); ++j) e += wt[j] * mag[impl_->first[m] + j];
      s.at(t, m) = std::log(std::max(e, kLogFloor));
    }
  }
  fftw_free(in);
  fftw_free(out);
  return s;
}

Spectrogram LogMel(const Waveform &w) {
  static const LogMelExtractor extractor;
  return extractor.Compute(w);
}

}  // namespace sslab
