// include/sslab/numerics/checkpoint.h

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

// Checkpoint container.
//
// Layout (all integers little-endian):
//   magic       8 bytes  "SSLABCKP"
//   version     u32      (kCheckpointVersion)
//   flags       u32      bit 0: encoder-only export
//   meta_len    u64, then meta_len bytes of UTF-8 JSON metadata
//   count       u64
//   count x { name_len u32, name bytes, ndim u32, dims u64[ndim],
//             payload float32[prod(dims)] }
//
// Entry names are namespaced by convention: "param/<name>",
// "ema/<name>", "adam/<group>/m/<name>", "adam/<group>/v/<name>".

#ifndef SSLAB_NUMERICS_CHECKPOINT_H_
#define SSLAB_NUMERICS_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>

#include "sslab/numerics/optim.h"
#include "sslab/numerics/params.h"
#include "sslab/numerics/tensor.h"

namespace sslab {

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr uint32_t kCheckpointEncoderOnly = 1u;

struct Checkpoint {
  uint32_t flags = 0;
  std::string metadata = "{}";
  std::map<std::string, Tensor> arrays;

  bool encoder_only() const { return (flags & kCheckpointEncoderOnly) != 0; }

  void PutParams(const std::string &section, const ParamStore &params);
  ParamStore GetParams(const std::string &section) const;
  void PutAdam(const std::string &group, const std::vector<std::string> &names,
               const OptimizerState &state);
  // Restores moments for `names`; step and betas are carried in metadata by
  // the caller.
  void GetAdam(const std::string &group, const std::vector<std::string> &names,
               OptimizerState &state) const;
};

void SaveCheckpoint(const Checkpoint &ckpt, const std::string &path);
Checkpoint LoadCheckpoint(const std::string &path);

// Writes to "<path>.tmp" and renames over `path`.
void AtomicWriteFile(const std::string &path, const std::string &contents);

}  // namespace sslab

#endif  // SSLAB_NUMERICS_CHECKPOINT_H_
