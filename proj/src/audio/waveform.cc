// src/audio/waveform.cc

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

#include "sslab/audio/waveform.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sslab/numerics/checkpoint.h"

namespace sslab {

namespace {

void Put16(std::string &s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

void Put32(std::string &s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t Get32(const std::string &s, size_t at) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
  return v;
}

uint16_t Get16(const std::string &s, size_t at) {
  return static_cast<uint16_t>(static_cast<unsigned char>(s[at]) |
                               (static_cast<unsigned char>(s[at + 1]) << 8));
}

}  // namespace

void WriteWav(const Waveform &w, const std::string &path) {
  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  std::string out = "RIFF";
  Put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  Put32(out, 16);
  Put16(out, 1);  // PCM
  Put16(out, 1);  // mono
  Put32(out, kSampleRate);
  Put32(out, kSampleRate * 2);
  Put16(out, 2);
  Put16(out, 16);
  out += "data";
  Put32(out, data_bytes);
  for (int16_t s : w.samples) Put16(out, static_cast<uint16_t>(s));
  AtomicWriteFile(path, out);
}

Waveform ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open audio file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  auto fail = [&](const std::string &why) { throw std::runtime_error(path + ": " + why); };
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0)
    fail("not a RIFF/WAVE file");
  size_t pos = 12;
  bool have_fmt = false;
  Waveform w;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const uint32_t len = Get32(buf, pos + 4);
    const size_t body = pos + 8;
    if (body + len > buf.size()) fail("chunk '" + id + "' overruns file");
    if (id == "fmt ") {
      if (len < 16) fail("short fmt chunk");
      if (Get16(buf, body) != 1) fail("only PCM is supported");
      if (Get16(buf, body + 2) != 1) fail("only mono is supported");
      if (Get32(buf, body + 4) != kSampleRate) fail("sample rate must be 16000 Hz");
      if (Get16(buf, body + 14) != 16) fail("only 16-bit samples are supported");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail("data chunk before fmt chunk");
      w.samples.resize(len / 2);
      for (size_t i = 0; i < w.samples.size(); ++i)
        w.samples[i] = static_cast<int16_t>(Get16(buf, body + 2 * i));
      if (w.samples.empty()) fail("empty data chunk");
      return w;
    }
    pos = body + len + (len & 1);
  }
  fail("no data chunk");
  return w;
}

}  // namespace sslab
