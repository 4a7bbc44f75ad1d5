// include/sslab/audio/synth.h

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

// Speech-like synthetic audio.  Every grapheme owns a fixed 120 ms signature
// made of two 60 ms halves, each a pair of sinusoids on a log-spaced grid.
// A speaker shifts the grid (pitch), re-balances the pair (tilt) and adds a
// constant low hum.  White noise is laid over the whole utterance.

#ifndef SSLAB_AUDIO_SYNTH_H_
#define SSLAB_AUDIO_SYNTH_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sslab/audio/waveform.h"

namespace sslab {

inline constexpr int kGraphemeMs = 120;
inline constexpr int kGraphemeSamples = kSampleRate * kGraphemeMs / 1000;

struct Speaker {
  double pitch = 1.0;    // multiplies every signature frequency
  double tilt = 1.0;     // gain of the upper tone relative to the lower one
  double hum_hz = 0.0;   // 0 disables the hum
};

// Deterministic profile for speaker ids 0..; id -1 is the neutral speaker.
Speaker SpeakerProfile(int speaker_id);

// Frequencies (Hz, neutral speaker) of the four tones of a grapheme id:
// {first half low, first half high, second half low, second half high}.
std::array<double, 4> GraphemeSignature(int grapheme_id);

// Throws TokenizerError for out-of-vocabulary characters and
// std::invalid_argument for an empty transcript or negative noise level.
Waveform SynthUtterance(const std::string &transcript, uint64_t seed, double noise_level,
                        const Speaker &speaker = Speaker{});

struct CorpusSpec {
  int num_utterances = 100;
  uint64_t seed = 1;
  int min_words = 1;
  int max_words = 3;
  double noise_min = 0.02;
  double noise_max = 0.2;
  int num_speakers = 4;
  std::string id_prefix = "utt";
};

struct CorpusItem {
  std::string id;
  std::string transcript;
  int speaker = 0;
  double noise_level = 0.0;
  uint64_t seed = 0;
};

const std::vector<std::string> &Lexicon();

// Transcripts are word sequences from Lexicon(), capped at 100 graphemes so
// every rendered utterance lasts between 0.12 s and 12 s.
std::vector<CorpusItem> GenerateCorpusItems(const CorpusSpec &spec);
Waveform Render(const CorpusItem &item);

}  // namespace sslab

#endif  // SSLAB_AUDIO_SYNTH_H_
