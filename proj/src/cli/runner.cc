// src/cli/runner.cc

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

#include "sslab/cli/runner.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sslab/asr/ctc.h"
#include "sslab/asr/decode.h"
#include "sslab/asr/lm.h"
#include "sslab/asr/wer.h"
#include "sslab/audio/manifest.h"
#include "sslab/audio/synth.h"
#include "sslab/audio/tokenizer.h"
#include "sslab/audio/waveform.h"
#include "sslab/nst/nst.h"
#include "sslab/pretrain/pretrain.h"
#include "sslab/probe/probe.h"

namespace sslab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Join(const std::vector<std::string> &v, const std::string &sep) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

struct Run {
  const ExperimentConfig &cfg;
  fs::path out;
  std::ostream &log;
  MetricsReport report;
  std::vector<MetricsReport> extra_reports;  // sweep cells
  std::map<std::string, double> timings;

  std::string Path(const std::string &rel) const { return (out / rel).string(); }

  template <typename F>
  void Stage(const std::string &name, F fn) {
    log << "[" << cfg.run_id << "] " << name << "\n";
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    timings[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  void WriteReports() const {
    AtomicWriteFile(Path("metrics.json"), ReportToJson(report));
    std::vector<MetricsReport> all{report};
    all.insert(all.end(), extra_reports.begin(), extra_reports.end());
    AtomicWriteFile(Path("plot.tsv"), PlotTable(all));
    AtomicWriteFile(Path("timings.json"), json(timings).dump(2) + "\n");
  }
};

ParamStore LoadModel(const Checkpoint &ck, const std::string &what) {
  if (ck.encoder_only()) throw std::invalid_argument(what + " must be a complete model checkpoint, not an encoder export");
  return ck.GetParams("param");
}

void WriteHypotheses(const std::string &path, const std::vector<Utterance> &data,
                     const std::vector<std::pair<std::string, std::vector<std::string>>> &columns) {
  std::string out;
  for (size_t i = 0; i < data.size(); ++i) {
    json j;
    j["id"] = data[i].id;
    j["reference"] = data[i].transcript;
    for (const auto &[name, hyps] : columns) j[name] = hyps[i];
    out += j.dump() + "\n";
  }
  AtomicWriteFile(path, out);
}

// ---- gen-corpus ----

void GenCorpus(Run &r) {
  const auto &c = r.cfg.corpus;
  Manifest m;
  double total = 0.0;
  r.Stage("synthesize", [&] {
    fs::create_directories(r.out / "audio");
    for (const auto &it : GenerateCorpusItems(c.spec)) {
      const Waveform w = Render(it);
      const std::string rel = "audio/" + it.id + ".wav";
      WriteWav(w, r.Path(rel));
      ManifestEntry e;
      e.id = it.id;
      e.audio = rel;
      if (c.labeled) e.transcript = it.transcript;
      e.duration_s = w.duration_s();
      auto words = SplitWords(it.transcript);
      std::sort(words.begin(), words.end());
      words.erase(std::unique(words.begin(), words.end()), words.end());
      e.tags["speaker"] = std::to_string(it.speaker);
      e.tags["num_words"] = std::to_string(CountWords(it.transcript));
      if (c.labeled) e.tags["words"] = Join(words, ",");
      total += e.duration_s;
      m.entries.push_back(std::move(e));
    }
    WriteManifest(m, r.Path(c.name + ".jsonl"));
  });
  r.report.summary["utterances"] = static_cast<double>(m.size());
  r.report.summary["total_duration_s"] = total;
}

// ---- pretrain ----

void Pretrain(Run &r) {
  std::vector<Tensor> feats;
  r.Stage("load", [&] {
    for (const auto &u : LoadUtterances(r.cfg.data.train, false)) feats.push_back(u.features.ToTensor());
  });
  PretrainResult res;
  r.Stage("train", [&] {
    res = RunPretraining(r.cfg.pretrain, feats, [&](int64_t step, double loss) {
      r.report.Add("pretrain/loss", step, loss);
      if (step % 100 == 0) r.log << "  step " << step << " loss " << loss << "\n";
    });
  });
  SaveCheckpoint(res.encoder, r.Path("encoder.ckpt"));
  r.report.summary["steps"] = static_cast<double>(res.losses.size());
  if (!res.losses.empty()) r.report.summary["final_loss"] = res.losses.back();
}

// ---- finetune ----

void Finetune(Run &r) {
  std::vector<Utterance> train, dev;
  r.Stage("load", [&] {
    train = LoadUtterances(r.cfg.data.train, true);
    dev = LoadUtterances(r.cfg.data.dev, true);
  });
  Checkpoint ck;
  if (!r.cfg.checkpoint.empty()) ck = LoadCheckpoint(r.cfg.checkpoint);
  const Checkpoint *ckp = r.cfg.checkpoint.empty() ? nullptr : &ck;
  const auto &fs_cfg = r.cfg.finetune;

  if (fs_cfg.labeled_fractions.empty()) {
    FinetuneResult res;
    r.Stage("train", [&] {
      const FinetuneConfig &fc = fs_cfg.cfg;
      res = RunFinetune(fc, PrepareInit(fc, ckp), ShuffledBatches(train, fc.batch_size, fc.seed), dev);
    });
    SaveCheckpoint(res.checkpoint, r.Path("model.ckpt"));
    r.report.AddSeries("train/loss", res.log.loss);
    r.report.AddSeries("dev/wer", res.log.dev_wer);
    r.report.summary["dev_wer"] = res.final_dev_wer;
    r.Stage("decode", [&] {
      WriteHypotheses(r.Path("dev_hypotheses.jsonl"), dev,
                      {{"hypothesis", Transcribe(res.eval_params, fs_cfg.cfg.encoder, dev)}});
    });
    return;
  }

  const std::vector<InitMode> inits =
      fs_cfg.sweep_inits.empty() ? std::vector<InitMode>{fs_cfg.cfg.init} : fs_cfg.sweep_inits;
  for (double frac : fs_cfg.labeled_fractions) {
    const auto n = static_cast<size_t>(std::ceil(frac * static_cast<double>(train.size())));
    const std::vector<Utterance> subset(train.begin(), train.begin() + std::max<size_t>(1, n));
    for (InitMode m : inits) {
      char frac_s[32];
      std::snprintf(frac_s, sizeof frac_s, "%g", frac);
      const std::string cell = std::string("labeled") + frac_s + "-" + ToString(m);
      FinetuneConfig fc = fs_cfg.cfg;
      fc.init = m;
      FinetuneResult res;
      r.Stage("train/" + cell, [&] {
        res = RunFinetune(fc, PrepareInit(fc, ckp), ShuffledBatches(subset, fc.batch_size, fc.seed), dev);
      });
      MetricsReport cr;
      cr.run_id = r.cfg.run_id + "/" + cell;
      cr.config_digest = r.cfg.digest;
      cr.AddSeries("train/loss", res.log.loss);
      cr.AddSeries("dev/wer", res.log.dev_wer);
      cr.summary["dev_wer"] = res.final_dev_wer;
      cr.summary["labeled_fraction"] = frac;
      cr.summary["labeled_utterances"] = static_cast<double>(subset.size());
      fs::create_directories(r.out / "cells" / cell);
      AtomicWriteFile(r.Path("cells/" + cell + "/metrics.json"), ReportToJson(cr));
      r.extra_reports.push_back(cr);
      r.report.summary["dev_wer/" + cell] = res.final_dev_wer;
      r.log << "  " << cell << " dev WER " << res.final_dev_wer << "\n";
    }
  }
}

// ---- nst ----

void Nst(Run &r) {
  const ExperimentConfig &c = r.cfg;
  const Checkpoint teacher_ck = LoadCheckpoint(c.checkpoint);
  NstInputs in;
  in.teacher = LoadModel(teacher_ck, "nst teacher");
  in.teacher_encoder = CheckpointEncoderConfig(teacher_ck);
  Manifest unlabeled;
  r.Stage("load", [&] {
    if (!c.data.train.empty()) in.labeled = LoadUtterances(c.data.train, true);
    in.dev = LoadUtterances(c.data.dev, true);
    unlabeled = ReadManifest(c.data.unlabeled);
  });
  in.unlabeled = SourcesFromManifest(unlabeled, c.data.unlabeled);
  in.student = c.finetune.cfg;
  Checkpoint student_ck;
  if (!c.nst.student_checkpoint.empty()) {
    student_ck = LoadCheckpoint(c.nst.student_checkpoint);
    in.student.init = InitMode::kEncoderPretrained;
    in.student_checkpoint = &student_ck;
  } else {
    in.student.init = InitMode::kScratch;
  }
  NstResult res;
  r.Stage("generations", [&] {
    res = RunNst(c.nst.cfg, in, [&](const NstReport &rep) {
      AtomicWriteFile(r.Path("nst_report.json"), NstReportToJson(rep));
      AtomicWriteFile(r.Path("nst_timings.json"), NstTimingsToJson(rep));
    });
  });
  SaveCheckpoint(res.student_checkpoint, r.Path("student.ckpt"));
  for (const auto &g : res.report.generations) {
    const std::string p = "gen" + std::to_string(g.generation);
    fs::create_directories(r.out / "nst" / p);
    WriteManifest(AnnotateManifest(unlabeled, g.retained_items), r.Path("nst/" + p + "/pseudo.jsonl"));
    r.report.AddSeries(p + "/student/loss", g.student_log.loss);
    r.report.AddSeries(p + "/student/dev_wer", g.student_log.dev_wer);
    r.report.summary[p + "/teacher_dev_wer"] = g.teacher_dev_wer;
    r.report.summary[p + "/student_dev_wer"] = g.student_dev_wer;
    r.report.summary[p + "/retained"] = static_cast<double>(g.retained);
    r.report.summary[p + "/skipped"] = static_cast<double>(g.skipped);
    r.log << "  generation " << g.generation << ": teacher " << g.teacher_dev_wer << " student " << g.student_dev_wer
          << " retained " << g.retained << " skipped " << g.skipped << "\n";
  }
}

// ---- probe ----

struct ProbeClips {
  Manifest manifest;
  std::vector<Spectrogram> clips;
};

ProbeClips LoadClips(const std::string &path) {
  ProbeClips p;
  p.manifest = ReadManifest(path);
  for (const auto &e : p.manifest.entries)
    p.clips.push_back(NormalizeFeatures(LogMel(ReadWav(ResolveAudioPath(path, e.audio)))));
  return p;
}

std::string Tag(const ManifestEntry &e, const std::string &tag) {
  const auto it = e.tags.find(tag);
  if (it == e.tags.end()) throw std::invalid_argument("entry '" + e.id + "' lacks tag '" + tag + "'");
  return it->second;
}

std::vector<std::string> SplitComma(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string x;
  while (std::getline(ss, x, ','))
    if (!x.empty()) out.push_back(x);
  return out;
}

void Probe(Run &r) {
  const ExperimentConfig &c = r.cfg;
  const Checkpoint ck = LoadCheckpoint(c.checkpoint);
  const ConformerConfig enc = CheckpointEncoderConfig(ck);
  const ParamStore params = ck.GetParams("param");
  ProbeClips train, dev, test;
  r.Stage("load", [&] {
    train = LoadClips(c.data.train);
    dev = LoadClips(c.data.dev);
    test = LoadClips(c.data.test);
  });
  if (!c.probe.tasks.empty()) {
    std::vector<FeatureRows> ftr, fdv, fte;
    r.Stage("extract", [&] {
      ftr = ExtractPooledAllLayers(params, enc, train.clips);
      fdv = ExtractPooledAllLayers(params, enc, dev.clips);
      fte = ExtractPooledAllLayers(params, enc, test.clips);
    });
    std::vector<ProbeTask> tasks;
    for (const auto &tag : c.probe.tasks) {
      std::map<std::string, int> classes;
      for (const auto &e : train.manifest.entries) classes.emplace(Tag(e, tag), 0);
      int k = 0;
      for (auto &[v, id] : classes) id = k++;
      auto labels = [&](const Manifest &m) {
        std::vector<int> y;
        for (const auto &e : m.entries) {
          const auto it = classes.find(Tag(e, tag));
          if (it == classes.end())
            throw std::invalid_argument("tag '" + tag + "' value of '" + e.id + "' never occurs in training");
          y.push_back(it->second);
        }
        return y;
      };
      tasks.push_back({tag, k, {ftr, labels(train.manifest)}, {fdv, labels(dev.manifest)}, {fte, labels(test.manifest)}});
    }
    ProbeReport pr;
    r.Stage("linear-probes", [&] { pr = RunProbe(tasks, enc.num_layers, c.probe.options); });
    AtomicWriteFile(r.Path("probe_report.json"), ProbeReportToJson(pr));
    for (const auto &[name, t] : pr.tasks) {
      r.report.summary[name + "/selected_layer"] = t.selected.layer;
      r.report.summary[name + "/selected_method"] = static_cast<double>(static_cast<int>(t.selected.method));
      r.report.summary[name + "/dev_accuracy"] = t.selected.dev_accuracy;
      r.report.summary[name + "/test_accuracy"] = t.selected.test_accuracy;
      r.log << "  " << name << ": layer " << t.selected.layer << " " << ToString(t.selected.method) << " test "
            << t.selected.test_accuracy << "\n";
    }
    for (const auto &[l, v] : pr.average_accuracy) r.report.Add("average_accuracy", l, v);
  }
  if (c.probe.mlp) {
    const MlpSection &m = *c.probe.mlp;
    if (m.layer < -1 || m.layer > enc.num_layers) throw ConfigError("probe.mlp.layer", "outside -1.." + std::to_string(enc.num_layers));
    std::map<std::string, int> classes;
    for (const auto &e : train.manifest.entries)
      for (const auto &v : SplitComma(Tag(e, m.tag))) classes.emplace(v, 0);
    int k = 0;
    for (auto &[v, id] : classes) id = k++;
    auto clips = [&](const ProbeClips &pc) {
      NoGradGuard ng;
      std::vector<MultiLabelClip> out;
      for (size_t i = 0; i < pc.clips.size(); ++i) {
        MultiLabelClip mc{pc.manifest.entries[i].id, Encode(params, enc, pc.clips[i].ToTensor()).at(m.layer),
                          std::vector<int>(k, 0)};
        for (const auto &v : SplitComma(Tag(pc.manifest.entries[i], m.tag))) {
          const auto it = classes.find(v);
          if (it != classes.end()) mc.targets[it->second] = 1;
        }
        out.push_back(std::move(mc));
      }
      return out;
    };
    MapResult mr;
    r.Stage("mlp-head", [&] {
      std::vector<double> losses;
      const MultiLabelHead head = TrainMlpHead(clips(train), k, m.head, &losses);
      for (size_t i = 0; i < losses.size(); ++i) r.report.Add("mlp/loss", static_cast<int64_t>(i + 1), losses[i]);
      mr = EvalMap(head, clips(test));
    });
    for (int cls : mr.excluded) {
      for (const auto &[v, id] : classes)
        if (id == cls) r.log << "  mlp: class '" << v << "' has no positive test clip, excluded from mAP\n";
    }
    r.report.summary["mlp/map"] = mr.map;
    r.report.summary["mlp/classes"] = k;
    r.report.summary["mlp/excluded_classes"] = static_cast<double>(mr.excluded.size());
  }
}

// ---- evaluate ----

void Evaluate(Run &r) {
  const ExperimentConfig &c = r.cfg;
  const Checkpoint ck = LoadCheckpoint(c.checkpoint);
  const ConformerConfig enc = CheckpointEncoderConfig(ck);
  const ParamStore params = LoadModel(ck, "evaluate checkpoint");
  std::vector<Utterance> dev, test;
  std::vector<std::string> lm_text;
  r.Stage("load", [&] {
    dev = LoadUtterances(c.data.dev, true);
    if (!c.data.test.empty()) test = LoadUtterances(c.data.test, true);
    if (c.evaluate.tune_fusion)
      for (const auto &e : ReadManifest(c.data.train).entries)
        if (e.transcript) lm_text.push_back(*e.transcript);
  });
  auto logits_of = [&](const std::vector<Utterance> &data) {
    NoGradGuard ng;
    std::vector<DevItem> items;
    for (const auto &u : data) items.push_back({AsrLogits(params, enc, u.features.ToTensor()), u.transcript});
    return items;
  };
  auto refs = [](const std::vector<DevItem> &items) {
    std::vector<std::string> out;
    for (const auto &d : items) out.push_back(d.reference);
    return out;
  };
  auto decode_all = [](const std::vector<DevItem> &items, const CharNgramLm *lm, const FusionParams &fp) {
    std::vector<std::string> out;
    for (const auto &d : items) out.push_back(DecodeText(d.logits, lm, fp));
    return out;
  };
  std::vector<DevItem> dev_items, test_items;
  r.Stage("encode", [&] {
    dev_items = logits_of(dev);
    test_items = logits_of(test);
  });
  auto greedy = [](const std::vector<DevItem> &items) {
    std::vector<std::string> out;
    for (const auto &d : items) out.push_back(Decode(GreedyDecode(d.logits)));
    return out;
  };
  const auto dev_greedy = greedy(dev_items), test_greedy = greedy(test_items);
  r.report.summary["dev_wer/greedy"] = Wer(refs(dev_items), dev_greedy);
  std::vector<std::pair<std::string, std::vector<std::string>>> dev_cols{{"greedy", dev_greedy}},
      test_cols{{"greedy", test_greedy}};
  if (!test.empty()) r.report.summary["test_wer/greedy"] = Wer(refs(test_items), test_greedy);
  if (c.evaluate.tune_fusion) {
    CharNgramLm lm(c.evaluate.lm_order, c.evaluate.lm_add_k);
    lm.Train(lm_text);
    TuneFusionOptions o;
    o.trials = c.evaluate.trials;
    o.seed = DeriveSeed(c.seed, "fusion");
    o.beam_width = c.evaluate.beam_width;
    TuneFusionResult tr;
    r.Stage("tune-fusion", [&] { tr = TuneFusion(dev_items, lm, o); });
    for (size_t i = 0; i < tr.trials.size(); ++i) r.report.Add("fusion/trial_wer", static_cast<int64_t>(i + 1), tr.trials[i].wer);
    r.report.summary["fusion_weight"] = tr.best.fusion_weight;
    r.report.summary["non_blank_reward"] = tr.best.non_blank_reward;
    r.report.summary["dev_wer/fused"] = tr.best_wer;
    dev_cols.emplace_back("fused", decode_all(dev_items, &lm, tr.best));
    if (!test.empty()) {
      auto fused = decode_all(test_items, &lm, tr.best);
      r.report.summary["test_wer/fused"] = Wer(refs(test_items), fused);
      test_cols.emplace_back("fused", std::move(fused));
    }
    r.log << "  fusion lambda " << tr.best.fusion_weight << " beta " << tr.best.non_blank_reward << " dev WER "
          << tr.best_wer << "\n";
  }
  WriteHypotheses(r.Path("dev_hypotheses.jsonl"), dev, dev_cols);
  if (!test.empty()) WriteHypotheses(r.Path("test_hypotheses.jsonl"), test, test_cols);
}

}  // namespace

std::vector<Utterance> LoadUtterances(const std::string &manifest_path, bool labeled) {
  const Manifest m = ReadManifest(manifest_path);
  std::vector<Utterance> out;
  for (size_t i = 0; i < m.entries.size(); ++i) {
    const auto &e = m.entries[i];
    if (labeled && !e.transcript)
      throw ManifestError(manifest_path, static_cast<int>(i + 1), "entry '" + e.id + "' has no transcript");
    out.push_back({e.id, NormalizeFeatures(LogMel(ReadWav(ResolveAudioPath(manifest_path, e.audio)))),
                   e.transcript.value_or("")});
  }
  return out;
}

MetricsReport RunCommand(const ExperimentConfig &cfg, const std::string &out_dir, std::ostream &log) {
  CheckInputsExist(cfg);
  fs::create_directories(out_dir);
  Run r{cfg, fs::path(out_dir), log, {}, {}, {}};
  r.report.run_id = cfg.run_id;
  r.report.config_digest = cfg.digest;
  AtomicWriteFile(r.Path("config.json"), json::parse(cfg.canonical_json).dump(2) + "\n");
  try {
    if (cfg.command == "gen-corpus")
      GenCorpus(r);
    else if (cfg.command == "pretrain")
      Pretrain(r);
    else if (cfg.command == "finetune")
      Finetune(r);
    else if (cfg.command == "nst")
      Nst(r);
    else if (cfg.command == "probe")
      Probe(r);
    else if (cfg.command == "evaluate")
      Evaluate(r);
    else
      throw ConfigError("command", "unknown command '" + cfg.command + "'");
  } catch (const std::exception &e) {
    r.report.complete = false;
    r.report.error = e.what();
    r.WriteReports();
    throw;
  }
  r.WriteReports();
  return r.report;
}

void EmitPlotData(const std::vector<std::string> &report_paths, const std::string &out_path) {
  std::vector<MetricsReport> reports;
  for (const auto &p : report_paths) reports.push_back(ReportFromJson(ReadFile(p)));
  AtomicWriteFile(out_path, PlotTable(reports));
}

}  // namespace sslab
