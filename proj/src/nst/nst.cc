// src/nst/nst.cc

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

#include "sslab/nst/nst.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "sslab/asr/ctc.h"
#include "sslab/audio/waveform.h"

namespace sslab {

namespace {

using nlohmann::json;

void RequireTeacher(const ParamStore &p, const ConformerConfig &cfg) {
  CheckConformerParams(cfg, p);
  for (const char *n : {"decoder/out/w", "decoder/out/b"})
    if (!p.Has(n)) throw std::invalid_argument(std::string("teacher lacks ") + n);
  if (p.Get("decoder/out/w").shape() != std::vector<int64_t>{cfg.model_dim, kVocabSize})
    throw std::invalid_argument("teacher output layer does not match the encoder config");
}

// Reshuffles an index order at the start of every pass.
class EpochStream {
 public:
  EpochStream(size_t n, uint64_t seed) : order_(n), seed_(seed) { std::iota(order_.begin(), order_.end(), 0); }

  size_t Next() {
    if (cursor_ == order_.size()) {
      std::mt19937_64 rng(DeriveSeed(seed_, epoch_++));
      std::shuffle(order_.begin(), order_.end(), rng);
      cursor_ = 0;
    }
    return order_[cursor_++];
  }

 private:
  std::vector<size_t> order_;
  uint64_t seed_;
  uint64_t epoch_ = 0;
  size_t cursor_ = 0;
};

json TrainLogJson(const TrainLog &log) {
  json j;
  j["loss"] = json::array();
  for (const auto &[s, v] : log.loss) j["loss"].push_back({s, v});
  j["dev_wer"] = json::array();
  for (const auto &[s, v] : log.dev_wer) j["dev_wer"].push_back({s, v});
  return j;
}

}  // namespace

void NstConfig::Validate() const {
  if (keep_fraction != 0.5 && keep_fraction != 1.0)
    throw std::invalid_argument("nst keep_fraction must be 0.5 or 1.0, got " + std::to_string(keep_fraction));
  if (!(nst_ratio >= 0.0 && nst_ratio <= 1.0))
    throw std::invalid_argument("nst_ratio must lie in [0, 1], got " + std::to_string(nst_ratio));
  if (generations < 1) throw std::invalid_argument("nst generations must be at least 1");
}

std::vector<UnlabeledSource> SourcesFromManifest(const Manifest &m, const std::string &manifest_path) {
  std::vector<UnlabeledSource> out;
  for (const auto &e : m.entries) {
    const std::string path = ResolveAudioPath(manifest_path, e.audio);
    out.push_back({e.id, [path] { return NormalizeFeatures(LogMel(ReadWav(path))); }});
  }
  return out;
}

std::vector<UnlabeledSource> SourcesFromUtterances(const std::vector<Utterance> &data) {
  std::vector<UnlabeledSource> out;
  for (const auto &u : data) {
    const Spectrogram *s = &u.features;
    out.push_back({u.id, [s] { return *s; }});
  }
  return out;
}

PseudoLabelResult PseudoLabel(const ParamStore &teacher, const ConformerConfig &cfg,
                              const std::vector<UnlabeledSource> &sources) {
  RequireTeacher(teacher, cfg);
  NoGradGuard ng;
  PseudoLabelResult r;
  for (const auto &src : sources) {
    Spectrogram feats;
    try {
      feats = src.load();
    } catch (const std::exception &e) {
      r.skipped.emplace_back(src.id, e.what());
      continue;
    }
    if (SubsampledLength(feats.num_frames) < 1) {
      r.skipped.emplace_back(src.id, "too short to encode");
      continue;
    }
    const Tensor logits = AsrLogits(teacher, cfg, feats.ToTensor());
    PseudoLabeledUtterance p;
    p.id = src.id;
    p.hypothesis = GreedyDecode(logits);
    const double loss = CtcLoss(logits, p.hypothesis).loss.item();
    p.loss_per_word = loss / std::max(1, CountWords(Decode(p.hypothesis)));
    if (!std::isfinite(p.loss_per_word)) {
      r.skipped.emplace_back(src.id, "non-finite teacher loss");
      continue;
    }
    r.items.push_back(std::move(p));
    r.features.push_back(std::move(feats));
  }
  return r;
}

std::vector<PseudoLabeledUtterance> FilterByConfidence(std::vector<PseudoLabeledUtterance> items,
                                                       double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("keep_fraction must lie in (0, 1], got " + std::to_string(keep_fraction));
  std::sort(items.begin(), items.end(), [](const auto &a, const auto &b) {
    if (a.loss_per_word != b.loss_per_word) return a.loss_per_word < b.loss_per_word;
    return a.id < b.id;
  });
  const auto keep = static_cast<size_t>(std::ceil(keep_fraction * static_cast<double>(items.size())));
  items.resize(std::min(keep, items.size()));
  return items;
}

int PseudoQuota(double nst_ratio, int batch_size) {
  return static_cast<int>(std::lround(nst_ratio * batch_size));
}

BatchProvider MixBatches(const std::vector<Utterance> &labeled, const std::vector<Utterance> &pseudo,
                         double nst_ratio, int batch_size, uint64_t seed) {
  if (!(nst_ratio >= 0.0 && nst_ratio <= 1.0))
    throw std::invalid_argument("nst_ratio must lie in [0, 1], got " + std::to_string(nst_ratio));
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  const int np = PseudoQuota(nst_ratio, batch_size), nl = batch_size - np;
  if (np > 0 && pseudo.empty()) throw std::invalid_argument("mix_batches: pseudo-labelled stream is empty");
  if (nl > 0 && labeled.empty()) throw std::invalid_argument("mix_batches: labelled stream is empty");
  auto ls = std::make_shared<EpochStream>(labeled.size(), DeriveSeed(seed, "labeled-stream"));
  auto ps = std::make_shared<EpochStream>(pseudo.size(), DeriveSeed(seed, "pseudo-stream"));
  return [&labeled, &pseudo, ls, ps, np, nl](int64_t) {
    std::vector<const Utterance *> b;
    b.reserve(np + nl);
    for (int i = 0; i < np; ++i) b.push_back(&pseudo[ps->Next()]);
    for (int i = 0; i < nl; ++i) b.push_back(&labeled[ls->Next()]);
    return b;
  };
}

std::vector<Utterance> PseudoUtterances(const PseudoLabelResult &labels,
                                        const std::vector<PseudoLabeledUtterance> &retained) {
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < labels.items.size(); ++i) index[labels.items[i].id] = i;
  std::vector<Utterance> out;
  for (const auto &r : retained) {
    const auto it = index.find(r.id);
    if (it == index.end()) throw std::invalid_argument("retained id '" + r.id + "' was never pseudo-labelled");
    out.push_back({r.id, labels.features[it->second], Decode(r.hypothesis)});
  }
  return out;
}

Manifest AnnotateManifest(const Manifest &unlabeled, const std::vector<PseudoLabeledUtterance> &retained) {
  std::map<std::string, const ManifestEntry *> by_id;
  for (const auto &e : unlabeled.entries) by_id[e.id] = &e;
  Manifest m;
  for (const auto &r : retained) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end()) throw std::invalid_argument("retained id '" + r.id + "' is not in the manifest");
    ManifestEntry e = *it->second;
    e.hypothesis = Decode(r.hypothesis);
    e.loss_per_word = r.loss_per_word;
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string NstReportToJson(const NstReport &r) {
  json j;
  j["complete"] = r.complete;
  if (!r.complete) {
    j["failed_stage"] = r.failed_stage;
    j["error"] = r.error;
  }
  j["generations"] = json::array();
  for (const auto &g : r.generations) {
    json e;
    e["generation"] = g.generation;
    e["teacher_dev_wer"] = g.teacher_dev_wer;
    e["student_dev_wer"] = g.student_dev_wer;
    e["unlabeled"] = g.unlabeled;
    e["skipped"] = g.skipped;
    e["retained"] = g.retained;
    e["keep_fraction"] = g.keep_fraction;
    e["nst_ratio"] = g.nst_ratio;
    e["pseudo_per_batch"] = g.pseudo_per_batch;
    e["labeled_per_batch"] = g.labeled_per_batch;
    e["retained_items"] = json::array();
    for (const auto &p : g.retained_items)
      e["retained_items"].push_back({{"id", p.id}, {"hypothesis", Decode(p.hypothesis)}, {"loss_per_word", p.loss_per_word}});
    e["student_log"] = TrainLogJson(g.student_log);
    j["generations"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string NstTimingsToJson(const NstReport &r) {
  json j = json::array();
  for (const auto &g : r.generations) j.push_back({{"generation", g.generation}, {"stage_seconds", g.stage_seconds}});
  return j.dump(2) + "\n";
}

NstResult RunNst(const NstConfig &cfg, const NstInputs &in, const std::function<void(const NstReport &)> &on_report) {
  cfg.Validate();
  in.student.Validate();
  RequireTeacher(in.teacher, in.teacher_encoder);
  NstResult res;
  NstReport &rep = res.report;
  auto notify = [&] {
    if (on_report) on_report(rep);
  };
  ParamStore teacher = in.teacher;
  ConformerConfig teacher_cfg = in.teacher_encoder;
  std::string stage;
  try {
    for (int g = 0; g < cfg.generations; ++g) {
      rep.generations.emplace_back();
      GenerationReport &gr = rep.generations.back();
      gr.generation = g + 1;
      gr.keep_fraction = cfg.keep_fraction;
      gr.nst_ratio = cfg.nst_ratio;
      FinetuneConfig scfg = in.student;
      scfg.seed = DeriveSeed(in.student.seed, static_cast<uint64_t>(g));
      gr.pseudo_per_batch = PseudoQuota(cfg.nst_ratio, scfg.batch_size);
      gr.labeled_per_batch = scfg.batch_size - gr.pseudo_per_batch;
      auto timed = [&](const char *name, auto &&fn) {
        stage = name;
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        gr.stage_seconds[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        notify();
      };

      PseudoLabelResult labels;
      std::vector<PseudoLabeledUtterance> retained;
      std::vector<Utterance> pseudo;
      FinetuneResult fr;
      timed("teacher_eval", [&] {
        if (!in.dev.empty()) gr.teacher_dev_wer = EvaluateWer(teacher, teacher_cfg, in.dev);
      });
      timed("pseudo_label", [&] {
        labels = PseudoLabel(teacher, teacher_cfg, in.unlabeled);
        gr.unlabeled = static_cast<int64_t>(in.unlabeled.size());
        gr.skipped = static_cast<int64_t>(labels.skipped.size());
      });
      timed("filter", [&] {
        retained = FilterByConfidence(labels.items, cfg.keep_fraction);
        gr.retained = static_cast<int64_t>(retained.size());
        gr.retained_items = retained;
        pseudo = PseudoUtterances(labels, retained);
      });
      timed("student_train", [&] {
        const BatchProvider batches =
            MixBatches(in.labeled, pseudo, cfg.nst_ratio, scfg.batch_size, DeriveSeed(scfg.seed, "nst-mix"));
        fr = RunFinetune(scfg, PrepareInit(scfg, in.student_checkpoint), batches, in.dev);
        gr.student_log = fr.log;
        gr.student_dev_wer = fr.final_dev_wer;
      });
      res.student = fr.eval_params;
      res.student_checkpoint = fr.checkpoint;
      if (cfg.promote_student) {
        teacher = res.student;
        teacher_cfg = scfg.encoder;
      }
    }
  } catch (const std::exception &e) {
    rep.complete = false;
    rep.failed_stage = stage;
    rep.error = e.what();
    notify();
    throw;
  }
  rep.complete = true;
  notify();
  return res;
}

}  // namespace sslab
