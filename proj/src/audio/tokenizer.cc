// src/audio/tokenizer.cc

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

#include "sslab/audio/tokenizer.h"

#include <sstream>

namespace sslab {

namespace {
constexpr std::string_view kGraphemes = "abcdefghijklmnopqrstuvwxyz '";

std::string Describe(char c) {
  std::ostringstream os;
  if (c >= 0x20 && c < 0x7f)
    os << "'" << c << "'";
  else
    os << "byte 0x" << std::hex << (static_cast<unsigned>(static_cast<unsigned char>(c)));
  return os.str();
}
}  // namespace

std::string_view Graphemes() { return kGraphemes; }

bool IsGrapheme(char c) { return kGraphemes.find(c) != std::string_view::npos; }

int GraphemeId(char c) {
  const auto pos = kGraphemes.find(c);
  if (pos == std::string_view::npos)
    throw TokenizerError("unknown grapheme " + Describe(c));
  return static_cast<int>(pos) + 1;
}

char GraphemeChar(int id) {
  if (id == kBlankId) throw TokenizerError("blank id cannot be decoded to text");
  if (id < 1 || id >= kVocabSize) throw TokenizerError("token id " + std::to_string(id) + " out of range");
  return kGraphemes[id - 1];
}

TokenSequence Encode(std::string_view text) {
  TokenSequence ids;
  ids.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    const auto pos = kGraphemes.find(text[i]);
    if (pos == std::string_view::npos)
      throw TokenizerError("unknown grapheme " + Describe(text[i]) + " at offset " + std::to_string(i));
    ids.push_back(static_cast<int>(pos) + 1);
  }
  return ids;
}

std::string Decode(const TokenSequence &ids) {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(GraphemeChar(id));
  return out;
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (c == ' ') {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

int CountWords(std::string_view text) { return static_cast<int>(SplitWords(text).size()); }

}  // namespace sslab
