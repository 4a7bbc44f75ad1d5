// src/audio/synth.cc

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

#include "sslab/audio/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "sslab/audio/tokenizer.h"
#include "sslab/numerics/params.h"

namespace sslab {

namespace {

constexpr int kGridSize = 24;
constexpr double kGridLowHz = 300.0;
constexpr double kGridHighHz = 6000.0;
constexpr int kRampSamples = 80;
constexpr double kToneAmp = 0.2;
constexpr size_t kMaxGraphemes = 100;

double GridHz(int i) {
  return kGridLowHz * std::pow(kGridHighHz / kGridLowHz, static_cast<double>(i) / (kGridSize - 1));
}

// All grid index pairs at least three steps apart, in lexicographic order.
const std::vector<std::pair<int, int>> &TonePairs() {
  static const std::vector<std::pair<int, int>> pairs = [] {
    std::vector<std::pair<int, int>> p;
    for (int i = 0; i < kGridSize; ++i)
      for (int j = i + 3; j < kGridSize; ++j) p.emplace_back(i, j);
    return p;
  }();
  return pairs;
}

double Ramp(int i, int n) {
  if (i < kRampSamples) return 0.5 - 0.5 * std::cos(std::numbers::pi * i / kRampSamples);
  if (i >= n - kRampSamples) return 0.5 - 0.5 * std::cos(std::numbers::pi * (n - 1 - i) / kRampSamples);
  return 1.0;
}

}  // namespace

Speaker SpeakerProfile(int speaker_id) {
  if (speaker_id < 0) return Speaker{};
  // Spread speakers over pitch and hum deterministically.
  const double u = std::fmod(0.618033988749895 * (speaker_id + 1), 1.0);
  const double v = std::fmod(0.754877666246693 * (speaker_id + 1), 1.0);
  Speaker s;
  s.pitch = 0.94 + 0.12 * u;
  s.tilt = 0.6 + 0.8 * v;
  s.hum_hz = 110.0 + 25.0 * (speaker_id % 8);
  return s;
}

std::array<double, 4> GraphemeSignature(int grapheme_id) {
  if (grapheme_id < 1 || grapheme_id >= kVocabSize)
    throw std::invalid_argument("no signature for token id " + std::to_string(grapheme_id));
  const auto &pairs = TonePairs();
  const int n = static_cast<int>(pairs.size());
  const auto a = pairs[(grapheme_id * 37) % n];
  const auto b = pairs[(grapheme_id * 53 + 11) % n];
  return {GridHz(a.first), GridHz(a.second), GridHz(b.first), GridHz(b.second)};
}

Waveform SynthUtterance(const std::string &transcript, uint64_t seed, double noise_level,
                        const Speaker &speaker) {
  if (transcript.empty()) throw std::invalid_argument("SynthUtterance: empty transcript");
  if (!(noise_level >= 0.0)) throw std::invalid_argument("SynthUtterance: noise level must be >= 0");
  const TokenSequence ids = Encode(transcript);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const size_t n = ids.size() * kGraphemeSamples;
  std::vector<double> x(n, 0.0);
  const int half = kGraphemeSamples / 2;
  for (size_t g = 0; g < ids.size(); ++g) {
    const auto sig = GraphemeSignature(ids[g]);
    for (int part = 0; part < 2; ++part) {
      const double f_lo = sig[2 * part] * speaker.pitch;
      const double f_hi = sig[2 * part + 1] * speaker.pitch;
      const double p_lo = phase(rng), p_hi = phase(rng);
      const size_t base = g * kGraphemeSamples + part * half;
      for (int i = 0; i < half; ++i) {
        const double t = static_cast<double>(i) / kSampleRate;
        const double env = Ramp(i, half);
        x[base + i] += kToneAmp * env *
                       (std::sin(2 * std::numbers::pi * f_lo * t + p_lo) +
                        speaker.tilt * std::sin(2 * std::numbers::pi * f_hi * t + p_hi));
      }
    }
  }
  if (speaker.hum_hz > 0.0) {
    const double p = phase(rng);
    for (size_t i = 0; i < n; ++i)
      x[i] += 0.05 * std::sin(2 * std::numbers::pi * speaker.hum_hz * i / kSampleRate + p);
  }
  Waveform w;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double v = x[i] + 0.1 * noise_level * gauss(rng);
    w.samples[i] = static_cast<int16_t>(std::lround(std::clamp(v, -1.0, 1.0) * 32767.0));
  }
  return w;
}

const std::vector<std::string> &Lexicon() {
  static const std::vector<std::string> words = {
      "the",   "a",     "cat",  "dog",   "sat",   "on",    "mat",   "red",  "blue",  "green",
      "big",   "small", "run",  "jump",  "over",  "under", "fox",   "hen",  "sun",   "moon",
      "sky",   "tree",  "bird", "fish",  "boat",  "sea",   "rain",  "wind", "snow",  "cold",
      "warm",  "quick", "lazy", "brown", "zebra", "yak",   "jolly", "vex",  "it's",  "don't",
      "light", "night", "day",  "play",  "with",  "her",   "his",   "way"};
  return words;
}

std::vector<CorpusItem> GenerateCorpusItems(const CorpusSpec &spec) {
  if (spec.num_utterances < 0 || spec.min_words < 1 || spec.max_words < spec.min_words ||
      spec.num_speakers < 1 || spec.noise_min < 0 || spec.noise_max < spec.noise_min)
    throw std::invalid_argument("GenerateCorpusItems: inconsistent corpus spec");
  std::mt19937_64 rng(DeriveSeed(spec.seed, "corpus"));
  std::uniform_int_distribution<int> nwords(spec.min_words, spec.max_words);
  std::uniform_int_distribution<size_t> word(0, Lexicon().size() - 1);
  std::uniform_int_distribution<int> spk(0, spec.num_speakers - 1);
  std::uniform_real_distribution<double> noise(spec.noise_min, spec.noise_max);
  std::vector<CorpusItem> items;
  items.reserve(spec.num_utterances);
  for (int i = 0; i < spec.num_utterances; ++i) {
    CorpusItem it;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06d", i);
    it.id = spec.id_prefix + buf;
    const int k = nwords(rng);
    for (int j = 0; j < k; ++j) {
      const std::string &w = Lexicon()[word(rng)];
      if (it.transcript.size() + w.size() + (j ? 1 : 0) > kMaxGraphemes) break;
      if (j) it.transcript += ' ';
      it.transcript += w;
    }
    it.speaker = spk(rng);
    it.noise_level = spec.noise_max > spec.noise_min ? noise(rng) : spec.noise_min;
    it.seed = DeriveSeed(spec.seed, static_cast<uint64_t>(i));
    items.push_back(std::move(it));
  }
  return items;
}

Waveform Render(const CorpusItem &item) {
  return SynthUtterance(item.transcript, item.seed, item.noise_level, SpeakerProfile(item.speaker));
}

}  // namespace sslab
