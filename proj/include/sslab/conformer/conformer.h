// include/sslab/conformer/conformer.h

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

// Conformer encoder over log-mel features.  Layer -1 is the subsampled
// embedding, layers 0..L-1 the blocks and layer L the output projection.

#ifndef SSLAB_CONFORMER_CONFORMER_H_
#define SSLAB_CONFORMER_CONFORMER_H_

#include <random>
#include <string>
#include <vector>

#include "sslab/audio/logmel.h"
#include "sslab/numerics/params.h"
#include "sslab/numerics/tensor.h"

namespace sslab {

struct ConformerConfig {
  int num_layers = 4;
  int model_dim = 64;
  int attention_heads = 4;
  int conv_kernel_size = 5;
  bool relative_attention = true;
  int ff_expansion = 4;
  int subsample_channels = 16;
  double dropout = 0.1;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;
  int head_dim() const { return model_dim / attention_heads; }

  static ConformerConfig Preset(const std::string &name);  // "XS" or "S"
};

struct LayerActivations {
  // layers[0] is layer -1.
  std::vector<Tensor> layers;
  // Subsampled features before masking and positional encoding.
  Tensor embedding;

  int num_layers() const { return static_cast<int>(layers.size()) - 2; }
  const Tensor &at(int layer) const;
  const Tensor &output() const { return layers.back(); }
  int64_t frames() const { return layers.front().rows(); }
};

struct EncodeOptions {
  bool train = false;               // enables dropout
  std::mt19937_64 *rng = nullptr;   // required when train is set
  // Rows of the subsampled embedding to replace by mask_embedding.
  const std::vector<char> *mask = nullptr;
  Tensor mask_embedding;
};

// Per-head attention internals, filled on request.
struct AttentionDebug {
  std::vector<Tensor> scores;   // scaled logits, T' x T'
  std::vector<Tensor> weights;  // softmax of scores
};

int SubsampledLength(int64_t frames);  // ceil(ceil(T/2)/2)

// Per-utterance zero-mean unit-variance normalisation of each mel bin.
Spectrogram NormalizeFeatures(const Spectrogram &s);

ParamStore InitConformer(const ConformerConfig &cfg, uint64_t seed);

// Checks that every encoder parameter is present with the right shape.
void CheckConformerParams(const ConformerConfig &cfg, const ParamStore &p);

// Input (T, 80) with T >= 4; output (T', model_dim).
Tensor Subsample(const ParamStore &p, const ConformerConfig &cfg, const Tensor &features);

LayerActivations Encode(const ParamStore &p, const ConformerConfig &cfg, const Tensor &features,
                        const EncodeOptions &opt = {});

std::vector<LayerActivations> EncodeBatch(const ParamStore &p, const ConformerConfig &cfg,
                                          const std::vector<Tensor> &batch);

// Multi-head self-attention sub-module (pre-norm, no residual) of the block
// whose parameters live under `prefix` (e.g. "encoder/block0/mhsa/").
Tensor SelfAttention(const ParamStore &p, const std::string &prefix, const ConformerConfig &cfg,
                     const Tensor &x, bool train, std::mt19937_64 *rng, AttentionDebug *debug = nullptr);

// Sinusoidal encodings: rows are positions 0..n-1 (absolute) or relative
// distances n-1 down to -(n-1) when relative is set (2n-1 rows).
Tensor SinusoidalEncoding(int64_t n, int64_t dim, bool relative);

std::string BlockPrefix(int i);

// Architecture as a JSON object string, stored in checkpoint metadata under
// the key "encoder".  Parsing throws std::invalid_argument on missing or
// malformed fields.
std::string ConformerConfigToJson(const ConformerConfig &cfg);
ConformerConfig ConformerConfigFromJson(const std::string &text);

}  // namespace sslab

#endif  // SSLAB_CONFORMER_CONFORMER_H_
