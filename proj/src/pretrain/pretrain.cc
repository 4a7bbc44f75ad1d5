// src/pretrain/pretrain.cc

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

#include "sslab/pretrain/pretrain.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "sslab/numerics/ops.h"

namespace sslab {

int MaskSpec::num_covered() const {
  return static_cast<int>(std::count(covered.begin(), covered.end(), 1));
}

std::vector<int64_t> MaskSpec::covered_positions() const {
  std::vector<int64_t> out;
  for (size_t i = 0; i < covered.size(); ++i)
    if (covered[i]) out.push_back(static_cast<int64_t>(i));
  return out;
}

MaskSpec SampleMasks(int length, double start_prob, int span_length, uint64_t seed, bool force_one) {
  if (length < 1) throw std::invalid_argument("SampleMasks: length must be >= 1");
  if (span_length < 1) throw std::invalid_argument("SampleMasks: span_length must be >= 1");
  if (!(start_prob >= 0.0 && start_prob <= 1.0)) throw std::invalid_argument("SampleMasks: start_prob outside [0, 1]");
  MaskSpec m;
  m.span_length = span_length;
  m.start_prob = start_prob;
  m.covered.assign(length, 0);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution start(start_prob);
  for (int t = 0; t < length; ++t)
    if (start(rng)) m.span_starts.push_back(t);
  if (m.span_starts.empty() && force_one)
    m.span_starts.push_back(std::uniform_int_distribution<int>(0, length - 1)(rng));
  for (int s : m.span_starts)
    for (int t = s; t < std::min(length, s + span_length); ++t) m.covered[t] = 1;
  return m;
}

Tensor ContrastiveLoss(const ContrastiveBatch &b) {
  const int64_t M = b.contexts.rows(), N = b.targets.rows();
  if (M < 1) throw ContractError("ContrastiveLoss: no contexts");
  if (b.contexts.cols() != b.targets.cols())
    throw ContractError("ContrastiveLoss: context dim " + std::to_string(b.contexts.cols()) + " != target dim " +
                        std::to_string(b.targets.cols()));
  if (static_cast<int64_t>(b.positives.size()) != M || static_cast<int64_t>(b.negatives.size()) != M)
    throw ContractError("ContrastiveLoss: need one positive and one negative list per context");
  if (!(b.temperature > 0.0)) throw ContractError("ContrastiveLoss: temperature must be > 0");
  const size_t K = b.negatives[0].size();
  if (K < 1) throw ContractError("ContrastiveLoss: need at least one distractor");
  std::vector<int64_t> idx;
  idx.reserve(M * (K + 1));
  for (int64_t m = 0; m < M; ++m) {
    if (b.negatives[m].size() != K) throw ContractError("ContrastiveLoss: ragged distractor lists");
    auto check = [&](int64_t r) {
      if (r < 0 || r >= N) throw ContractError("ContrastiveLoss: target index out of range");
      return m * N + r;
    };
    idx.push_back(check(b.positives[m]));
    for (int64_t r : b.negatives[m]) idx.push_back(check(r));
  }
  const Tensor sim = ops::Scale(
      ops::MatMulTransB(ops::L2NormalizeRows(b.contexts), ops::L2NormalizeRows(b.targets)), 1.0 / b.temperature);
  const int64_t C = static_cast<int64_t>(K) + 1;
  const Tensor logp = ops::LogSoftmax(ops::Gather(sim, std::move(idx), {M, C}));
  std::vector<int64_t> first(M);
  for (int64_t m = 0; m < M; ++m) first[m] = m * C;
  return ops::Scale(ops::Mean(ops::Gather(logp, std::move(first), {M})), -1.0);
}

std::vector<std::vector<int64_t>> SampleNegatives(const std::vector<int64_t> &covered, int64_t length, int k,
                                                  std::mt19937_64 &rng) {
  if (k < 1) throw ContractError("SampleNegatives: k must be >= 1");
  std::vector<std::vector<int64_t>> out;
  out.reserve(covered.size());
  std::vector<int64_t> uncovered;
  if (covered.size() == 1) {
    for (int64_t t = 0; t < length; ++t)
      if (t != covered[0]) uncovered.push_back(t);
    if (uncovered.empty()) throw ContractError("SampleNegatives: no distractor available for a single position");
  }
  for (size_t i = 0; i < covered.size(); ++i) {
    std::vector<int64_t> pool;
    if (covered.size() == 1) {
      pool = uncovered;
    } else {
      pool.reserve(covered.size() - 1);
      for (size_t j = 0; j < covered.size(); ++j)
        if (j != i) pool.push_back(covered[j]);
    }
    std::vector<int64_t> neg(k);
    if (static_cast<int>(pool.size()) >= k) {
      for (int j = 0; j < k; ++j) {
        const size_t r = std::uniform_int_distribution<size_t>(j, pool.size() - 1)(rng);
        std::swap(pool[j], pool[r]);
        neg[j] = pool[j];
      }
    } else {
      std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
      for (int j = 0; j < k; ++j) neg[j] = pool[pick(rng)];
    }
    out.push_back(std::move(neg));
  }
  return out;
}

void PretrainConfig::Validate() const {
  encoder.Validate();
  auto bad = [](const std::string &f, const std::string &why) {
    throw std::invalid_argument("pretrain." + f + ": " + why);
  };
  if (!(start_prob >= 0.0 && start_prob <= 1.0)) bad("start_prob", "must lie in [0, 1]");
  if (span_length < 1) bad("span_length", "must be >= 1");
  if (num_negatives < 1) bad("num_negatives", "must be >= 1");
  if (!(temperature > 0.0)) bad("temperature", "must be > 0");
  if (!(schedule.peak_lr > 0.0)) bad("schedule.peak_lr", "must be > 0");
  if (schedule.warmup_steps < 1) bad("schedule.warmup_steps", "must be >= 1");
  if (steps < 0) bad("steps", "must be >= 0");
  if (batch_size < 1) bad("batch_size", "must be >= 1");
  if (!(ema_decay > 0.0 && ema_decay < 1.0)) bad("ema_decay", "must lie in (0, 1)");
}

ParamStore InitPretrainModel(const PretrainConfig &cfg, uint64_t seed) {
  cfg.Validate();
  ParamStore p = InitConformer(cfg.encoder, seed);
  std::mt19937_64 rng(DeriveSeed(seed, "pretrain-init"));
  const int64_t d = cfg.encoder.model_dim;
  p.Set("pretrain/mask_emb", NormalInit({d}, 1.0, rng));
  p.Set("pretrain/target_proj/w", GlorotUniform(d, d, {d, d}, rng));
  p.Set("pretrain/target_proj/b", Tensor::Zeros({d}, true));
  return p;
}

UtteranceLoss PretrainUtteranceLoss(const ParamStore &p, const PretrainConfig &cfg, const Tensor &features,
                                    uint64_t seed, bool train) {
  const int length = SubsampledLength(features.rows());
  const MaskSpec mask = SampleMasks(length, cfg.start_prob, cfg.span_length, DeriveSeed(seed, "mask"));
  std::mt19937_64 rng(DeriveSeed(seed, "forward"));
  EncodeOptions opt;
  opt.train = train;
  opt.rng = &rng;
  opt.mask = &mask.covered;
  opt.mask_embedding = p.Get("pretrain/mask_emb");
  const LayerActivations act = Encode(p, cfg.encoder, features, opt);

  const std::vector<int64_t> covered = mask.covered_positions();
  ContrastiveBatch b;
  b.contexts = ops::GatherRows(act.output(), covered);
  const Tensor src = cfg.stop_gradient_targets ? act.embedding.Detach() : act.embedding;
  b.targets = ops::Linear(src, p.Get("pretrain/target_proj/w"), p.Get("pretrain/target_proj/b"));
  if (cfg.stop_gradient_targets) b.targets = b.targets.Detach();
  b.positives = covered;
  b.negatives = SampleNegatives(covered, length, cfg.num_negatives, rng);
  b.temperature = cfg.temperature;
  const int m = static_cast<int>(covered.size());
  return {ops::Scale(ContrastiveLoss(b), m), m};
}

PretrainTrainer::PretrainTrainer(const PretrainConfig &cfg, ParamStore init)
    : cfg_(cfg), params_(std::move(init)), names_(params_.Names()) {
  cfg_.Validate();
  CheckConformerParams(cfg_.encoder, params_);
  const auto t = params_.Tensors(names_);
  adam_ = MakeAdamState(t);
  ema_ = MakeEma(t, cfg_.ema_decay);
}

double PretrainTrainer::Step(const std::vector<const Tensor *> &batch, const std::vector<std::string> &ids) {
  if (batch.empty()) throw std::invalid_argument("PretrainTrainer::Step: empty batch");
  const std::vector<Tensor> leaves = params_.Tensors(names_);
  const uint64_t step_seed = DeriveSeed(DeriveSeed(cfg_.seed, "pretrain-step"), static_cast<uint64_t>(step_));
  int anchors = 0;
  auto diagnose = [&](const std::string &what) {
    std::ostringstream os;
    os << "pre-training aborted at step " << step_ + 1 << ": " << what << " (lr " << LrAt(cfg_.schedule, step_ + 1)
       << ", batch of " << batch.size() << ", " << anchors << " masked positions";
    if (!ids.empty()) {
      os << ", utterances:";
      for (const auto &id : ids) os << ' ' << id;
    }
    os << ")";
    return std::runtime_error(os.str());
  };
  Tensor total;
  try {
    for (size_t i = 0; i < batch.size(); ++i) {
      UtteranceLoss u = PretrainUtteranceLoss(params_, cfg_, *batch[i], DeriveSeed(step_seed, i), true);
      total = total.defined() ? ops::Add(total, u.loss_sum) : u.loss_sum;
      anchors += u.anchors;
    }
  } catch (const ContractError &e) {
    throw diagnose(e.what());
  }
  const Tensor loss = ops::Scale(total, 1.0 / anchors);
  const double value = loss.item();
  if (!std::isfinite(value)) throw diagnose("loss is " + std::to_string(value));
  const Gradients g = Backward(loss, leaves);
  std::vector<Tensor> grads;
  grads.reserve(leaves.size());
  for (const Tensor &t : leaves) grads.push_back(g.of(t));
  ClipGlobalNorm(grads, cfg_.clip_norm);
  ++step_;
  const std::vector<Tensor> updated = AdamStep(leaves, grads, adam_, LrAt(cfg_.schedule, step_));
  params_.Update(names_, updated);
  if (cfg_.use_ema) EmaUpdate(ema_, updated);
  return value;
}

ParamStore PretrainTrainer::EvalParams() const {
  if (!cfg_.use_ema) return params_;
  ParamStore out;
  for (size_t i = 0; i < names_.size(); ++i)
    out.Set(names_[i], Tensor::FromData(params_.Get(names_[i]).shape(), ema_.shadow[i], true));
  return out;
}

Checkpoint PretrainTrainer::ExportEncoder() const {
  const ParamStore eval = EvalParams();
  ParamStore enc;
  enc.Merge(eval, "encoder/");
  Checkpoint ck;
  ck.flags = kCheckpointEncoderOnly;
  nlohmann::json meta = {{"kind", "pretrained-encoder"},
                         {"encoder", nlohmann::json::parse(ConformerConfigToJson(cfg_.encoder))},
                         {"steps", step_},
                         {"ema", cfg_.use_ema}};
  ck.metadata = meta.dump();
  ck.PutParams("param", enc);
  return ck;
}

PretrainResult RunPretraining(const PretrainConfig &cfg, const std::vector<Tensor> &features,
                              const std::function<void(int64_t, double)> &on_step) {
  cfg.Validate();
  if (features.empty()) throw std::invalid_argument("RunPretraining: no utterances");
  PretrainTrainer trainer(cfg, InitPretrainModel(cfg, DeriveSeed(cfg.seed, "init")));
  std::mt19937_64 order_rng(DeriveSeed(cfg.seed, "pretrain-order"));
  std::vector<size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();
  const size_t bs = std::min<size_t>(cfg.batch_size, features.size());
  PretrainResult res;
  for (int s = 0; s < cfg.steps; ++s) {
    std::vector<const Tensor *> batch;
    while (batch.size() < bs) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch.push_back(&features[order[cursor++]]);
    }
    const double l = trainer.Step(batch);
    res.losses.push_back(l);
    if (on_step) on_step(trainer.step(), l);
  }
  res.encoder = trainer.ExportEncoder();
  return res;
}

}  // namespace sslab
