// tests/unit/audio_test.cc

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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "sslab/audio/logmel.h"
#include "sslab/audio/manifest.h"
#include "sslab/audio/synth.h"
#include "sslab/audio/tokenizer.h"

using namespace sslab;
namespace fs = std::filesystem;

namespace {

std::string TempPath(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / "sslab_audio_test";
  fs::create_directories(dir);
  return (dir / name).string();
}

Waveform Tone(double hz, int n, double amp) {
  Waveform w;
  w.samples.resize(n);
  for (int i = 0; i < n; ++i)
    w.samples[i] = static_cast<int16_t>(std::lround(amp * 32767.0 * std::sin(2 * std::numbers::pi * hz * i / 16000.0)));
  return w;
}

}  // namespace

TEST_CASE("tokenizer: round trip, empty text, blank rejected") {
  const auto ids = Encode("cat");
  CHECK(ids == TokenSequence{GraphemeId('c'), GraphemeId('a'), GraphemeId('t')});
  CHECK(Decode(ids) == "cat");
  CHECK(Encode("").empty());
  CHECK_THROWS_AS(Decode({3, kBlankId, 4}), TokenizerError);
  CHECK(Graphemes().size() == kVocabSize - 1);
}

TEST_CASE("tokenizer: unknown grapheme names the character") {
  try {
    Encode("ab#c");
    FAIL("expected error");
  } catch (const TokenizerError &e) {
    CHECK(std::string(e.what()).find("'#'") != std::string::npos);
  }
  CHECK_THROWS_AS(Encode("Cat"), TokenizerError);
}

TEST_CASE("tokenizer: bijection on random texts and blank-free id sequences") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(0, 40), id(1, kVocabSize - 1);
  for (int trial = 0; trial < 200; ++trial) {
    TokenSequence s(len(rng));
    for (int &x : s) x = id(rng);
    const std::string text = Decode(s);
    CHECK(Encode(text) == s);
    for (int x : Encode(text)) CHECK(x != kBlankId);
  }
}

TEST_CASE("tokenizer: word counting") {
  CHECK(CountWords("the cat") == 2);
  CHECK(CountWords("  a  ") == 1);
  CHECK(CountWords("") == 0);
  CHECK(SplitWords("it's a dog") == std::vector<std::string>{"it's", "a", "dog"});
}

TEST_CASE("synth: deterministic per transcript and seed") {
  const auto a = SynthUtterance("ab", 7, 0.0);
  const auto b = SynthUtterance("ab", 7, 0.0);
  CHECK(a.samples == b.samples);
  const auto c = SynthUtterance("ab", 7, 0.3);
  const auto d = SynthUtterance("ab", 7, 0.3);
  CHECK(c.samples == d.samples);
  CHECK(SynthUtterance("ab", 8, 0.3).samples != c.samples);
}

TEST_CASE("synth: errors") {
  CHECK_THROWS_AS(SynthUtterance("", 1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(SynthUtterance("a!", 1, 0.1), TokenizerError);
  CHECK_THROWS_AS(SynthUtterance("a", 1, -0.1), std::invalid_argument);
}

TEST_CASE("synth: duration is 120 ms per grapheme") {
  const auto w = SynthUtterance("abc", 3, 0.0);
  CHECK(std::abs(w.duration_s() - 0.360) <= 0.010);
  CHECK(w.samples.size() == 3 * 1920);
}

TEST_CASE("synth: grapheme signatures are pairwise distinct") {
  std::set<std::array<double, 4>> seen;
  for (int g = 1; g < kVocabSize; ++g) {
    const auto s = GraphemeSignature(g);
    CHECK(s[0] < s[1]);
    CHECK(s[2] < s[3]);
    CHECK(s[3] < 8000.0 / 1.06);
    seen.insert(s);
  }
  CHECK(seen.size() == kVocabSize - 1);
}

TEST_CASE("synth: corpus generation is reproducible and bounded") {
  CorpusSpec spec;
  spec.num_utterances = 100;
  spec.seed = 42;
  const auto items = GenerateCorpusItems(spec);
  const auto again = GenerateCorpusItems(spec);
  REQUIRE(items.size() == 100);
  std::set<std::string> ids;
  for (size_t i = 0; i < items.size(); ++i) {
    CHECK(items[i].id == again[i].id);
    CHECK(items[i].transcript == again[i].transcript);
    CHECK(items[i].seed == again[i].seed);
    ids.insert(items[i].id);
    const auto w = Render(items[i]);
    CHECK(w.samples == Render(again[i]).samples);
    CHECK(w.duration_s() >= 0.12);
    CHECK(w.duration_s() <= 12.0);
  }
  CHECK(ids.size() == 100);
}

TEST_CASE("wav: round trip and rejection of other formats") {
  const auto w = SynthUtterance("hello", 11, 0.2);
  const std::string p = TempPath("hello.wav");
  WriteWav(w, p);
  CHECK(ReadWav(p).samples == w.samples);
  std::ofstream(TempPath("junk.wav")) << "not audio at all";
  CHECK_THROWS(ReadWav(TempPath("junk.wav")));
  CHECK_THROWS(ReadWav(TempPath("missing.wav")));
}

TEST_CASE("logmel: silence hits the floor everywhere") {
  Waveform w;
  w.samples.assign(16000, 0);
  const auto s = LogMel(w);
  CHECK(s.num_frames == 98);
  for (double v : s.frames) CHECK(v == std::log(1e-6));
}

TEST_CASE("logmel: frame count and short input") {
  CHECK(NumFrames(16000) == (16000 - 400) / 160 + 1);
  CHECK(NumFrames(400) == 1);
  CHECK(NumFrames(399) == 0);
  Waveform w;
  w.samples.assign(399, 1);
  CHECK_THROWS_AS(LogMel(w), std::invalid_argument);
  w.samples.assign(400, 1);
  CHECK(LogMel(w).num_frames == 1);
}

TEST_CASE("logmel: a 1 kHz tone peaks in the band containing 1 kHz") {
  // Oracle: recompute the HTK mel edges and pick the filter whose triangle
  // is highest at 1000 Hz.
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double lo = mel(125.0), hi = mel(7600.0);
  int best = -1;
  double best_w = -1;
  for (int m = 0; m < 80; ++m) {
    const double l = hz(lo + (hi - lo) * m / 81), c = hz(lo + (hi - lo) * (m + 1) / 81),
                 r = hz(lo + (hi - lo) * (m + 2) / 81);
    double wgt = 0.0;
    if (1000.0 > l && 1000.0 < c) wgt = (1000.0 - l) / (c - l);
    if (1000.0 >= c && 1000.0 < r) wgt = (r - 1000.0) / (r - c);
    if (wgt > best_w) best_w = wgt, best = m;
  }
  REQUIRE(best >= 0);
  const auto s = LogMel(Tone(1000.0, 16000, 0.5));
  for (int t = 0; t < s.num_frames; ++t) {
    int arg = 0;
    for (int m = 1; m < 80; ++m)
      if (s.at(t, m) > s.at(t, arg)) arg = m;
    CHECK(arg == best);
  }
}

TEST_CASE("logmel: one hop of leading silence shifts frames by one") {
  for (uint64_t seed : {1u, 2u, 3u}) {
    const auto w = SynthUtterance("shift me", seed, 0.2, SpeakerProfile(1));
    Waveform shifted;
    shifted.samples.assign(160, 0);
    shifted.samples.insert(shifted.samples.end(), w.samples.begin(), w.samples.end());
    const auto a = LogMel(w);
    const auto b = LogMel(shifted);
    REQUIRE(b.num_frames == a.num_frames + 1);
    for (int t = 0; t < a.num_frames; ++t)
      for (int m = 0; m < 80; ++m) CHECK(std::abs(b.at(t + 1, m) - a.at(t, m)) <= 1e-5);
  }
}

TEST_CASE("logmel: filterbank rows are unit-peak triangles") {
  const auto fb = MelFilterbank();
  REQUIRE(fb.size() == 80);
  for (const auto &row : fb) {
    double mx = 0;
    int nz = 0;
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      mx = std::max(mx, v);
      nz += v > 0;
    }
    CHECK(nz >= 1);
  }
}

TEST_CASE("manifest: three-entry round trip") {
  Manifest m;
  m.entries.push_back({"u1", "a/u1.wav", std::string("the cat"), 0.84, {}, {}, {}});
  m.entries.push_back({"u2", "a/u2.wav", std::nullopt, 1.0 / 3.0, {}, {}, {{"speaker", "2"}}});
  m.entries.push_back({"u3", "/abs/u3.wav", std::string("a"), 0.12, std::string("b"), 0.25, {}});
  const std::string p = TempPath("m.jsonl");
  WriteManifest(m, p);
  CHECK(ReadManifest(p) == m);
}

TEST_CASE("manifest: errors carry the line number") {
  const std::string p = TempPath("bad.jsonl");
  auto expect_line = [&](const std::string &body, int line) {
    std::ofstream(p) << body;
    try {
      ReadManifest(p);
      FAIL("expected error");
    } catch (const ManifestError &e) {
      CHECK(e.line() == line);
      CHECK(std::string(e.what()).find(":" + std::to_string(line) + ":") != std::string::npos);
    }
  };
  expect_line("{\"id\":\"a\",\"audio\":\"a.wav\",\"duration_s\":1}\n{\"id\":\"b\",\"audio\":\"b.wav\"}\n", 2);
  expect_line("{\"id\":\"a\",\"audio\":\"a.wav\",\"duration_s\":1}\n{\"id\":\"a\",\"audio\":\"b.wav\",\"duration_s\":1}\n", 2);
  expect_line("{\"id\":\"a\",\"audio\":\"a.wav\",\"duration_s\":1}\nnot json\n", 2);
  expect_line("{\"id\":\"a\",\"audio\":\"a.wav\",\"duration_s\":-1}\n", 1);
  expect_line("{\"id\":\"a\",\"audio\":\"a.wav\",\"duration_s\":1,\"transcript\":\"\"}\n", 1);
  expect_line("{\"id\":\"a\",\"audio\":\"a.wav\",\"duration_s\":1,\"extra\":3}\n", 1);
}

TEST_CASE("manifest: synthetic corpus durations lie within bounds") {
  CorpusSpec spec;
  spec.num_utterances = 100;
  spec.seed = 9;
  Manifest m;
  for (const auto &it : GenerateCorpusItems(spec))
    m.entries.push_back({it.id, it.id + ".wav", it.transcript, Render(it).duration_s(), {}, {}, {}});
  const std::string p = TempPath("corpus.jsonl");
  WriteManifest(m, p);
  const auto back = ReadManifest(p);
  REQUIRE(back.size() == 100);
  for (const auto &e : back.entries) {
    CHECK(e.duration_s >= 0.12);
    CHECK(e.duration_s <= 12.0);
  }
  CHECK(ResolveAudioPath("/x/y/m.jsonl", "a.wav") == "/x/y/a.wav");
  CHECK(ResolveAudioPath("/x/y/m.jsonl", "/a.wav") == "/a.wav");
}
