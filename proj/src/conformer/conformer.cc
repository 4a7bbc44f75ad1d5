// src/conformer/conformer.cc

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

#include "sslab/conformer/conformer.h"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "sslab/numerics/ops.h"

namespace sslab {

namespace {

enum class Init { kGlorot, kZero, kOne };

struct ParamSpec {
  std::string name;
  Shape shape;
  Init init;
  int64_t fan_in = 0, fan_out = 0;
};

void AddLinear(std::vector<ParamSpec> &s, const std::string &p, int64_t in, int64_t out) {
  s.push_back({p + "w", {in, out}, Init::kGlorot, in, out});
  s.push_back({p + "b", {out}, Init::kZero});
}

void AddNorm(std::vector<ParamSpec> &s, const std::string &p, int64_t d) {
  s.push_back({p + "g", {d}, Init::kOne});
  s.push_back({p + "b", {d}, Init::kZero});
}

std::vector<ParamSpec> Specs(const ConformerConfig &cfg) {
  const int64_t d = cfg.model_dim, c = cfg.subsample_channels, k = cfg.conv_kernel_size;
  std::vector<ParamSpec> s;
  s.push_back({"encoder/subsample/conv1/w", {9, c}, Init::kGlorot, 9, 9 * c});
  s.push_back({"encoder/subsample/conv1/b", {c}, Init::kZero});
  s.push_back({"encoder/subsample/conv2/w", {9 * c, c}, Init::kGlorot, 9 * c, 9 * c});
  s.push_back({"encoder/subsample/conv2/b", {c}, Init::kZero});
  AddLinear(s, "encoder/subsample/proj/", 20 * c, d);
  for (int i = 0; i < cfg.num_layers; ++i) {
    const std::string b = BlockPrefix(i);
    for (const char *ff : {"ff1/", "ff2/"}) {
      AddNorm(s, b + ff + "ln/", d);
      AddLinear(s, b + ff + "l1/", d, cfg.ff_expansion * d);
      AddLinear(s, b + ff + "l2/", cfg.ff_expansion * d, d);
    }
    AddNorm(s, b + "mhsa/ln/", d);
    for (const char *m : {"q/", "k/", "v/", "o/"}) AddLinear(s, b + "mhsa/" + m, d, d);
    if (cfg.relative_attention) {
      s.push_back({b + "mhsa/pos_w", {d, d}, Init::kGlorot, d, d});
      s.push_back({b + "mhsa/pos_u", {d}, Init::kZero});
      s.push_back({b + "mhsa/pos_v", {d}, Init::kZero});
    }
    AddNorm(s, b + "conv/ln/", d);
    AddLinear(s, b + "conv/pw1/", d, 2 * d);
    s.push_back({b + "conv/dw/w", {k, d}, Init::kGlorot, k, k});
    s.push_back({b + "conv/dw/b", {d}, Init::kZero});
    AddNorm(s, b + "conv/ln2/", d);
    AddLinear(s, b + "conv/pw2/", d, d);
    AddNorm(s, b + "final_ln/", d);
  }
  AddLinear(s, "encoder/proj/", d, d);
  return s;
}

Tensor MaybeDropout(const Tensor &x, double p, bool train, std::mt19937_64 *rng) {
  if (!train || p <= 0.0) return x;
  return ops::Dropout(x, p, *rng);
}

Tensor Norm(const ParamStore &p, const std::string &prefix, const Tensor &x) {
  return ops::LayerNorm(x, p.Get(prefix + "g"), p.Get(prefix + "b"));
}

Tensor Lin(const ParamStore &p, const std::string &prefix, const Tensor &x) {
  return ops::Linear(x, p.Get(prefix + "w"), p.Get(prefix + "b"));
}

Tensor FeedForward(const ParamStore &p, const std::string &prefix, const ConformerConfig &cfg,
                   const Tensor &x, bool train, std::mt19937_64 *rng) {
  Tensor h = Norm(p, prefix + "ln/", x);
  h = ops::Silu(Lin(p, prefix + "l1/", h));
  h = MaybeDropout(h, cfg.dropout, train, rng);
  h = Lin(p, prefix + "l2/", h);
  return MaybeDropout(h, cfg.dropout, train, rng);
}

Tensor ConvModule(const ParamStore &p, const std::string &prefix, const ConformerConfig &cfg,
                  const Tensor &x, bool train, std::mt19937_64 *rng) {
  Tensor h = Norm(p, prefix + "ln/", x);
  h = ops::Glu(Lin(p, prefix + "pw1/", h));
  h = ops::DepthwiseConv1d(h, p.Get(prefix + "dw/w"), p.Get(prefix + "dw/b"));
  h = ops::Silu(Norm(p, prefix + "ln2/", h));
  h = Lin(p, prefix + "pw2/", h);
  return MaybeDropout(h, cfg.dropout, train, rng);
}

Tensor Block(const ParamStore &p, int i, const ConformerConfig &cfg, const Tensor &x, bool train,
             std::mt19937_64 *rng) {
  const std::string b = BlockPrefix(i);
  Tensor h = ops::Add(x, ops::Scale(FeedForward(p, b + "ff1/", cfg, x, train, rng), 0.5));
  h = ops::Add(h, SelfAttention(p, b + "mhsa/", cfg, h, train, rng));
  h = ops::Add(h, ConvModule(p, b + "conv/", cfg, h, train, rng));
  h = ops::Add(h, ops::Scale(FeedForward(p, b + "ff2/", cfg, h, train, rng), 0.5));
  return Norm(p, b + "final_ln/", h);
}

}  // namespace

void ConformerConfig::Validate() const {
  auto bad = [](const std::string &field, const std::string &why) {
    throw std::invalid_argument("conformer." + field + ": " + why);
  };
  if (num_layers < 1) bad("num_layers", "must be >= 1");
  if (model_dim < 1) bad("model_dim", "must be >= 1");
  if (attention_heads < 1) bad("attention_heads", "must be >= 1");
  if (model_dim % attention_heads != 0) bad("model_dim", "must be divisible by attention_heads");
  if (conv_kernel_size < 1 || conv_kernel_size % 2 == 0) bad("conv_kernel_size", "must be odd and positive");
  if (ff_expansion < 1) bad("ff_expansion", "must be >= 1");
  if (subsample_channels < 1) bad("subsample_channels", "must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout", "must lie in [0, 1)");
}

ConformerConfig ConformerConfig::Preset(const std::string &name) {
  ConformerConfig c;
  if (name == "XS") {
    c.num_layers = 4, c.model_dim = 64, c.attention_heads = 4;
  } else if (name == "S") {
    c.num_layers = 8, c.model_dim = 144, c.attention_heads = 4;
  } else {
    throw std::invalid_argument("unknown conformer preset '" + name + "' (expected XS or S)");
  }
  return c;
}

const Tensor &LayerActivations::at(int layer) const {
  if (layer < -1 || layer > num_layers())
    throw std::out_of_range("layer " + std::to_string(layer) + " outside [-1, " +
                            std::to_string(num_layers()) + "]");
  return layers[layer + 1];
}

std::string BlockPrefix(int i) { return "encoder/block" + std::to_string(i) + "/"; }

int SubsampledLength(int64_t frames) {
  const int64_t a = (frames + 1) / 2;
  return static_cast<int>((a + 1) / 2);
}

Spectrogram NormalizeFeatures(const Spectrogram &s) {
  Spectrogram out = s;
  const int T = s.num_frames;
  if (T == 0) return out;
  for (int m = 0; m < kNumMelBins; ++m) {
    double mean = 0.0, var = 0.0;
    for (int t = 0; t < T; ++t) mean += s.at(t, m);
    mean /= T;
    for (int t = 0; t < T; ++t) var += (s.at(t, m) - mean) * (s.at(t, m) - mean);
    var /= T;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (int t = 0; t < T; ++t) out.at(t, m) = (s.at(t, m) - mean) * inv;
  }
  return out;
}

ParamStore InitConformer(const ConformerConfig &cfg, uint64_t seed) {
  cfg.Validate();
  std::mt19937_64 rng(DeriveSeed(seed, "conformer-init"));
  ParamStore p;
  for (const auto &s : Specs(cfg)) {
    switch (s.init) {
      case Init::kGlorot: p.Set(s.name, GlorotUniform(s.fan_in, s.fan_out, s.shape, rng)); break;
      case Init::kZero: p.Set(s.name, Tensor::Zeros(s.shape, true)); break;
      case Init::kOne: p.Set(s.name, Tensor::Filled(s.shape, 1.0, true)); break;
    }
  }
  return p;
}

void CheckConformerParams(const ConformerConfig &cfg, const ParamStore &p) {
  cfg.Validate();
  for (const auto &s : Specs(cfg)) {
    if (!p.Has(s.name)) throw std::invalid_argument("missing encoder parameter " + s.name);
    if (p.Get(s.name).shape() != s.shape)
      throw std::invalid_argument("parameter " + s.name + " has shape " + ShapeString(p.Get(s.name).shape()) +
                                  ", config expects " + ShapeString(s.shape));
  }
}

Tensor SinusoidalEncoding(int64_t n, int64_t dim, bool relative) {
  const int64_t rows = relative ? 2 * n - 1 : n;
  std::vector<double> v(rows * dim);
  for (int64_t r = 0; r < rows; ++r) {
    const double pos = relative ? static_cast<double>(n - 1 - r) : static_cast<double>(r);
    for (int64_t k = 0; k < dim; ++k) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (k / 2)) / dim);
      v[r * dim + k] = (k % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
    }
  }
  return Tensor::FromData({rows, dim}, std::move(v));
}

Tensor Subsample(const ParamStore &p, const ConformerConfig &cfg, const Tensor &features) {
  if (features.ndim() != 2 || features.cols() != kNumMelBins)
    throw std::invalid_argument("Subsample: expected (T, 80) features, got " + ShapeString(features.shape()));
  if (features.rows() < 4)
    throw std::invalid_argument("Subsample: need at least 4 frames, got " + std::to_string(features.rows()));
  const int64_t T = features.rows(), c = cfg.subsample_channels;
  Tensor h = ops::Reshape(features, {T, kNumMelBins, 1});
  h = ops::Relu(ops::Conv2d(h, p.Get("encoder/subsample/conv1/w"), p.Get("encoder/subsample/conv1/b"), 3, 3, 2, 1));
  h = ops::Relu(ops::Conv2d(h, p.Get("encoder/subsample/conv2/w"), p.Get("encoder/subsample/conv2/b"), 3, 3, 2, 1));
  const int64_t t2 = h.dim(0);
  h = ops::Reshape(h, {t2, h.dim(1) * c});
  return Lin(p, "encoder/subsample/proj/", h);
}

Tensor SelfAttention(const ParamStore &p, const std::string &prefix, const ConformerConfig &cfg,
                     const Tensor &x, bool train, std::mt19937_64 *rng, AttentionDebug *debug) {
  const int64_t T = x.rows(), d = cfg.model_dim, dh = cfg.head_dim();
  if (x.cols() != d) throw std::invalid_argument("SelfAttention: input width " + std::to_string(x.cols()) +
                                                 " != model_dim " + std::to_string(d));
  const Tensor h = Norm(p, prefix + "ln/", x);
  const Tensor q = Lin(p, prefix + "q/", h);
  const Tensor k = Lin(p, prefix + "k/", h);
  const Tensor v = Lin(p, prefix + "v/", h);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor qu = q, qv, pos;
  std::vector<int64_t> shift;
  if (cfg.relative_attention) {
    qu = ops::AddRow(q, p.Get(prefix + "pos_u"));
    qv = ops::AddRow(q, p.Get(prefix + "pos_v"));
    pos = ops::MatMul(SinusoidalEncoding(T, d, true), p.Get(prefix + "pos_w"));
    // Row c of pos encodes distance T-1-c; score (i,j) needs distance i-j.
    shift.resize(T * T);
    for (int64_t i = 0; i < T; ++i)
      for (int64_t j = 0; j < T; ++j) shift[i * T + j] = i * (2 * T - 1) + (T - 1 - i + j);
  }
  std::vector<Tensor> heads;
  heads.reserve(cfg.attention_heads);
  for (int hd = 0; hd < cfg.attention_heads; ++hd) {
    const int64_t c0 = hd * dh;
    Tensor s = ops::MatMulTransB(ops::SliceCols(qu, c0, dh), ops::SliceCols(k, c0, dh));
    if (cfg.relative_attention) {
      const Tensor bd = ops::MatMulTransB(ops::SliceCols(qv, c0, dh), ops::SliceCols(pos, c0, dh));
      s = ops::Add(s, ops::Gather(bd, shift, {T, T}));
    }
    s = ops::Scale(s, scale);
    const Tensor w = ops::Softmax(s);
    if (debug) {
      debug->scores.push_back(s);
      debug->weights.push_back(w);
    }
    heads.push_back(ops::MatMul(w, ops::SliceCols(v, c0, dh)));
  }
  Tensor out = Lin(p, prefix + "o/", ops::ConcatCols(heads));
  return MaybeDropout(out, cfg.dropout, train, rng);
}

LayerActivations Encode(const ParamStore &p, const ConformerConfig &cfg, const Tensor &features,
                        const EncodeOptions &opt) {
  cfg.Validate();
  if (opt.train && opt.rng == nullptr) throw std::invalid_argument("Encode: training mode needs an rng");
  LayerActivations act;
  act.embedding = Subsample(p, cfg, features);
  Tensor h = act.embedding;
  if (opt.mask) {
    if (static_cast<int64_t>(opt.mask->size()) != h.rows())
      throw std::invalid_argument("Encode: mask length " + std::to_string(opt.mask->size()) +
                                  " != subsampled length " + std::to_string(h.rows()));
    h = ops::ReplaceRows(h, *opt.mask, opt.mask_embedding);
  }
  if (!cfg.relative_attention) h = ops::Add(h, SinusoidalEncoding(h.rows(), cfg.model_dim, false));
  act.layers.push_back(h);
  h = MaybeDropout(h, cfg.dropout, opt.train, opt.rng);
  for (int i = 0; i < cfg.num_layers; ++i) {
    h = Block(p, i, cfg, h, opt.train, opt.rng);
    act.layers.push_back(h);
  }
  act.layers.push_back(Lin(p, "encoder/proj/", h));
  return act;
}

std::vector<LayerActivations> EncodeBatch(const ParamStore &p, const ConformerConfig &cfg,
                                          const std::vector<Tensor> &batch) {
  std::vector<LayerActivations> out;
  out.reserve(batch.size());
  for (const Tensor &x : batch) out.push_back(Encode(p, cfg, x));
  return out;
}

std::string ConformerConfigToJson(const ConformerConfig &cfg) {
  nlohmann::json j = {{"num_layers", cfg.num_layers},
                      {"model_dim", cfg.model_dim},
                      {"attention_heads", cfg.attention_heads},
                      {"conv_kernel_size", cfg.conv_kernel_size},
                      {"relative_attention", cfg.relative_attention},
                      {"ff_expansion", cfg.ff_expansion},
                      {"subsample_channels", cfg.subsample_channels},
                      {"dropout", cfg.dropout}};
  return j.dump();
}

ConformerConfig ConformerConfigFromJson(const std::string &text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw std::invalid_argument(std::string("encoder metadata: ") + e.what());
  }
  ConformerConfig c;
  auto get = [&](const char *key, auto &out) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("encoder metadata: missing '") + key + "'");
    try {
      j.at(key).get_to(out);
    } catch (const nlohmann::json::exception &) {
      throw std::invalid_argument(std::string("encoder metadata: bad value for '") + key + "'");
    }
  };
  get("num_layers", c.num_layers);
  get("model_dim", c.model_dim);
  get("attention_heads", c.attention_heads);
  get("conv_kernel_size", c.conv_kernel_size);
  get("relative_attention", c.relative_attention);
  get("ff_expansion", c.ff_expansion);
  get("subsample_channels", c.subsample_channels);
  get("dropout", c.dropout);
  c.Validate();
  return c;
}

}  // namespace sslab
