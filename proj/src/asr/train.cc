// src/asr/train.cc

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

#include "sslab/asr/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "sslab/asr/ctc.h"
#include "sslab/asr/wer.h"
#include "sslab/audio/tokenizer.h"
#include "sslab/numerics/ops.h"

namespace sslab {

std::string ToString(InitMode m) {
  switch (m) {
    case InitMode::kScratch: return "scratch";
    case InitMode::kEncoderPretrained: return "encoder-pretrained";
    case InitMode::kFull: return "full";
  }
  return "?";
}

InitMode InitModeFromString(const std::string &s) {
  if (s == "scratch") return InitMode::kScratch;
  if (s == "encoder-pretrained") return InitMode::kEncoderPretrained;
  if (s == "full") return InitMode::kFull;
  throw std::invalid_argument("unknown init mode '" + s + "' (expected scratch, encoder-pretrained or full)");
}

void FinetuneConfig::Validate() const {
  encoder.Validate();
  auto bad = [](const std::string &f, const std::string &why) {
    throw std::invalid_argument("finetune." + f + ": " + why);
  };
  for (const auto *s : {&encoder_schedule, &decoder_schedule}) {
    if (!(s->peak_lr > 0.0)) bad("schedule.peak_lr", "must be > 0");
    if (s->warmup_steps < 1) bad("schedule.warmup_steps", "must be >= 1");
  }
  if (steps < 0) bad("steps", "must be >= 0");
  if (batch_size < 1) bad("batch_size", "must be >= 1");
  if (!(ema_decay > 0.0 && ema_decay < 1.0)) bad("ema_decay", "must lie in (0, 1)");
  if (eval_every < 0) bad("eval_every", "must be >= 0");
  augment.Validate();
}

ParamStore InitAsrModel(const ConformerConfig &cfg, uint64_t seed) {
  ParamStore p = InitConformer(cfg, seed);
  std::mt19937_64 rng(DeriveSeed(seed, "decoder-init"));
  p.Set("decoder/out/w", GlorotUniform(cfg.model_dim, kVocabSize, {cfg.model_dim, kVocabSize}, rng));
  p.Set("decoder/out/b", Tensor::Zeros({kVocabSize}, true));
  return p;
}

ConformerConfig CheckpointEncoderConfig(const Checkpoint &ckpt) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.metadata);
  } catch (const nlohmann::json::exception &e) {
    throw std::invalid_argument(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
  if (!meta.contains("encoder")) throw std::invalid_argument("checkpoint metadata has no encoder description");
  return ConformerConfigFromJson(meta["encoder"].dump());
}

namespace {

void RequireSameArchitecture(const ConformerConfig &want, const ConformerConfig &got) {
  auto diff = [](const std::string &f, auto a, auto b) {
    if (a != b)
      throw std::invalid_argument("checkpoint architecture mismatch: " + f + " is " + std::to_string(b) +
                                  " in the checkpoint but " + std::to_string(a) + " in the config");
  };
  diff("num_layers", want.num_layers, got.num_layers);
  diff("model_dim", want.model_dim, got.model_dim);
  diff("attention_heads", want.attention_heads, got.attention_heads);
  diff("conv_kernel_size", want.conv_kernel_size, got.conv_kernel_size);
  diff("relative_attention", want.relative_attention, got.relative_attention);
  diff("ff_expansion", want.ff_expansion, got.ff_expansion);
  diff("subsample_channels", want.subsample_channels, got.subsample_channels);
}

}  // namespace

ParamStore PrepareInit(const FinetuneConfig &cfg, const Checkpoint *ckpt) {
  cfg.Validate();
  ParamStore fresh = InitAsrModel(cfg.encoder, DeriveSeed(cfg.seed, "asr-init"));
  if (cfg.init == InitMode::kScratch) return fresh;
  if (!ckpt) throw std::invalid_argument("init mode " + ToString(cfg.init) + " needs a checkpoint");
  RequireSameArchitecture(cfg.encoder, CheckpointEncoderConfig(*ckpt));
  const ParamStore loaded = ckpt->GetParams("param");
  ParamStore out;
  if (cfg.init == InitMode::kEncoderPretrained) {
    out.Merge(loaded, "encoder/");
    out.Merge(fresh, "decoder/");
  } else {
    if (ckpt->encoder_only()) throw std::invalid_argument("init mode full needs a complete model checkpoint");
    out.Merge(loaded, "encoder/");
    out.Merge(loaded, "decoder/");
  }
  CheckConformerParams(cfg.encoder, out);
  for (const char *n : {"decoder/out/w", "decoder/out/b"}) {
    if (!out.Has(n)) throw std::invalid_argument(std::string("checkpoint lacks ") + n);
    if (out.Get(n).shape() != fresh.Get(n).shape())
      throw std::invalid_argument(std::string("checkpoint tensor ") + n + " has the wrong shape");
  }
  // Make every tensor a trainable leaf.
  ParamStore leaves;
  for (const auto &[name, t] : out.entries()) leaves.Set(name, t.AsLeaf());
  return leaves;
}

Tensor AsrLogits(const ParamStore &p, const ConformerConfig &cfg, const Tensor &features, const EncodeOptions &opt) {
  const LayerActivations act = Encode(p, cfg, features, opt);
  return ops::Linear(act.output(), p.Get("decoder/out/w"), p.Get("decoder/out/b"));
}

std::vector<std::string> Transcribe(const ParamStore &p, const ConformerConfig &cfg,
                                    const std::vector<Utterance> &data) {
  NoGradGuard ng;
  std::vector<std::string> out;
  out.reserve(data.size());
  for (const auto &u : data) out.push_back(Decode(GreedyDecode(AsrLogits(p, cfg, u.features.ToTensor()))));
  return out;
}

double EvaluateWer(const ParamStore &p, const ConformerConfig &cfg, const std::vector<Utterance> &data) {
  std::vector<std::string> refs;
  refs.reserve(data.size());
  for (const auto &u : data) refs.push_back(u.transcript);
  return Wer(refs, Transcribe(p, cfg, data));
}

AsrTrainer::AsrTrainer(const FinetuneConfig &cfg, ParamStore init) : cfg_(cfg), params_(std::move(init)) {
  cfg_.Validate();
  CheckConformerParams(cfg_.encoder, params_);
  enc_names_ = params_.Names("encoder/");
  dec_names_ = params_.Names("decoder/");
  if (dec_names_.empty()) throw std::invalid_argument("AsrTrainer: no decoder parameters");
  enc_adam_ = MakeAdamState(params_.Tensors(enc_names_));
  dec_adam_ = MakeAdamState(params_.Tensors(dec_names_));
  all_names_ = enc_names_;
  all_names_.insert(all_names_.end(), dec_names_.begin(), dec_names_.end());
  ema_ = MakeEma(params_.Tensors(all_names_), cfg_.ema_decay);
}

double AsrTrainer::Step(const std::vector<const Utterance *> &batch) {
  if (batch.empty()) throw std::invalid_argument("AsrTrainer::Step: empty batch");
  const uint64_t step_seed = DeriveSeed(DeriveSeed(cfg_.seed, "asr-step"), static_cast<uint64_t>(step_));
  const std::vector<Tensor> enc = params_.Tensors(enc_names_), dec = params_.Tensors(dec_names_);
  Tensor total;
  int used = 0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const Utterance &u = *batch[i];
    const uint64_t s = DeriveSeed(step_seed, i);
    const Spectrogram x =
        cfg_.use_augment ? ApplySpecAugment(u.features, cfg_.augment, DeriveSeed(s, "specaugment")) : u.features;
    std::mt19937_64 rng(DeriveSeed(s, "dropout"));
    EncodeOptions opt;
    opt.train = true;
    opt.rng = &rng;
    const CtcResult r = CtcLoss(AsrLogits(params_, cfg_.encoder, x.ToTensor(), opt), Encode(u.transcript));
    if (!r.feasible) {
      ++skipped_;
      continue;
    }
    total = total.defined() ? ops::Add(total, r.loss) : r.loss;
    ++used;
  }
  ++step_;
  if (used == 0) return std::numeric_limits<double>::quiet_NaN();
  const Tensor loss = ops::Scale(total, 1.0 / used);
  const double value = loss.item();
  if (!std::isfinite(value)) throw std::runtime_error("CTC loss is " + std::to_string(value) + " at step " +
                                                      std::to_string(step_));
  std::vector<Tensor> leaves = enc;
  leaves.insert(leaves.end(), dec.begin(), dec.end());
  const Gradients g = Backward(loss, leaves);
  std::vector<Tensor> genc, gdec;
  for (const Tensor &t : enc) genc.push_back(g.of(t));
  for (const Tensor &t : dec) gdec.push_back(g.of(t));
  std::vector<Tensor> all = genc;
  all.insert(all.end(), gdec.begin(), gdec.end());
  ClipGlobalNorm(all, cfg_.clip_norm);
  std::copy(all.begin(), all.begin() + genc.size(), genc.begin());
  std::copy(all.begin() + genc.size(), all.end(), gdec.begin());
  const auto new_enc = AdamStep(enc, genc, enc_adam_, LrAt(cfg_.encoder_schedule, step_));
  const auto new_dec = AdamStep(dec, gdec, dec_adam_, LrAt(cfg_.decoder_schedule, step_));
  params_.Update(enc_names_, new_enc);
  params_.Update(dec_names_, new_dec);
  if (cfg_.use_ema) EmaUpdate(ema_, params_.Tensors(all_names_));
  return value;
}

ParamStore AsrTrainer::EvalParams() const {
  if (!cfg_.use_ema) return params_;
  ParamStore out;
  for (size_t i = 0; i < all_names_.size(); ++i)
    out.Set(all_names_[i], Tensor::FromData(params_.Get(all_names_[i]).shape(), ema_.shadow[i], true));
  return out;
}

Checkpoint AsrTrainer::Export() const {
  Checkpoint ck;
  nlohmann::json meta = {{"kind", "asr-model"},
                         {"encoder", nlohmann::json::parse(ConformerConfigToJson(cfg_.encoder))},
                         {"steps", step_},
                         {"init", ToString(cfg_.init)}};
  ck.metadata = meta.dump();
  ck.PutParams("param", EvalParams());
  return ck;
}

BatchProvider ShuffledBatches(const std::vector<Utterance> &data, int batch_size, uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("ShuffledBatches: no data");
  struct State {
    std::vector<size_t> order;
    size_t cursor;
    std::mt19937_64 rng;
  };
  auto st = std::make_shared<State>();
  st->order.resize(data.size());
  std::iota(st->order.begin(), st->order.end(), 0);
  st->cursor = data.size();
  st->rng.seed(DeriveSeed(seed, "batch-order"));
  const size_t bs = std::min<size_t>(batch_size, data.size());
  return [&data, st, bs](int64_t) {
    std::vector<const Utterance *> b;
    while (b.size() < bs) {
      if (st->cursor == st->order.size()) {
        std::shuffle(st->order.begin(), st->order.end(), st->rng);
        st->cursor = 0;
      }
      b.push_back(&data[st->order[st->cursor++]]);
    }
    return b;
  };
}

FinetuneResult RunFinetune(const FinetuneConfig &cfg, ParamStore init, const BatchProvider &batches,
                           const std::vector<Utterance> &dev) {
  AsrTrainer trainer(cfg, std::move(init));
  FinetuneResult res;
  for (int s = 0; s < cfg.steps; ++s) {
    const double l = trainer.Step(batches(trainer.step()));
    res.log.loss.emplace_back(trainer.step(), l);
    if (cfg.eval_every > 0 && trainer.step() % cfg.eval_every == 0 && !dev.empty() && trainer.step() < cfg.steps)
      res.log.dev_wer.emplace_back(trainer.step(), EvaluateWer(trainer.EvalParams(), cfg.encoder, dev));
  }
  res.eval_params = trainer.EvalParams();
  if (!dev.empty()) {
    res.final_dev_wer = EvaluateWer(res.eval_params, cfg.encoder, dev);
    res.log.dev_wer.emplace_back(trainer.step(), res.final_dev_wer);
  }
  res.checkpoint = trainer.Export();
  return res;
}

}  // namespace sslab
