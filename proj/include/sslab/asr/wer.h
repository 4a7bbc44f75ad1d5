// include/sslab/asr/wer.h

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

#ifndef SSLAB_ASR_WER_H_
#define SSLAB_ASR_WER_H_

#include <string>
#include <vector>

namespace sslab {

// Word-level Levenshtein distance with unit costs.
int WordEditDistance(const std::string &ref, const std::string &hyp);

// Sum of edit distances over sum of reference word counts.  Throws
// std::invalid_argument for unequal list lengths or an empty reference
// corpus (zero reference words).
double Wer(const std::vector<std::string> &refs, const std::vector<std::string> &hyps);

}  // namespace sslab

#endif  // SSLAB_ASR_WER_H_
