// include/sslab/audio/tokenizer.h

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

#ifndef SSLAB_AUDIO_TOKENIZER_H_
#define SSLAB_AUDIO_TOKENIZER_H_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sslab {

// Grapheme inventory: blank (id 0), 'a'..'z' (1..26), space (27),
// apostrophe (28).
inline constexpr int kBlankId = 0;
inline constexpr int kVocabSize = 29;

class TokenizerError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using TokenSequence = std::vector<int>;

bool IsGrapheme(char c);
int GraphemeId(char c);         // throws TokenizerError for unknown characters
char GraphemeChar(int id);      // throws for blank or out-of-range ids
std::string_view Graphemes();   // the 28 non-blank graphemes in id order

TokenSequence Encode(std::string_view text);
std::string Decode(const TokenSequence &ids);

// Number of space-separated words (runs of non-space graphemes).
int CountWords(std::string_view text);
std::vector<std::string> SplitWords(std::string_view text);

}  // namespace sslab

#endif  // SSLAB_AUDIO_TOKENIZER_H_
