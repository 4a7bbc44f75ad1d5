// tests/unit/nst_test.cc

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "sslab/asr/ctc.h"
#include "sslab/audio/synth.h"
#include "sslab/nst/nst.h"

using namespace sslab;

namespace {

std::vector<PseudoLabeledUtterance> Items(const std::vector<std::pair<std::string, double>> &v) {
  std::vector<PseudoLabeledUtterance> out;
  for (const auto &[id, l] : v) out.push_back({id, {}, l});
  return out;
}

std::vector<std::string> Ids(const std::vector<PseudoLabeledUtterance> &v) {
  std::vector<std::string> out;
  for (const auto &p : v) out.push_back(p.id);
  return out;
}

std::vector<Utterance> SynthSet(int n, uint64_t seed, const std::string &prefix) {
  CorpusSpec spec;
  spec.num_utterances = n;
  spec.seed = seed;
  spec.max_words = 2;
  spec.id_prefix = prefix;
  std::vector<Utterance> out;
  for (const auto &it : GenerateCorpusItems(spec))
    out.push_back({it.id, NormalizeFeatures(LogMel(Render(it))), it.transcript});
  return out;
}

std::vector<Utterance> Dummy(int n, const std::string &prefix) {
  std::vector<Utterance> out;
  for (int i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), {}, "a"});
  return out;
}

FinetuneConfig SmallFinetune() {
  FinetuneConfig fc;
  fc.encoder.num_layers = 2;
  fc.encoder.model_dim = 32;
  fc.encoder.attention_heads = 4;
  fc.encoder.subsample_channels = 8;
  fc.encoder.dropout = 0.0;
  fc.batch_size = 4;
  fc.use_augment = false;
  fc.ema_decay = 0.99;
  fc.encoder_schedule = {2e-3, 200, LrScheduleKind::kConstantWithWarmup};
  fc.decoder_schedule = fc.encoder_schedule;
  return fc;
}

// A teacher memorising a handful of utterances.
const FinetuneResult &OverfitTeacher(const std::vector<Utterance> &data) {
  static const FinetuneResult r = [&] {
    FinetuneConfig fc = SmallFinetune();
    fc.steps = 1200;
    return RunFinetune(fc, PrepareInit(fc, nullptr), ShuffledBatches(data, 4, 1), {});
  }();
  return r;
}

}  // namespace

TEST_CASE("filter: keep half of five") {
  const auto out = FilterByConfidence(Items({{"e", 0.5}, {"a", 0.9}, {"c", 0.1}, {"b", 0.3}, {"d", 0.7}}), 0.5);
  CHECK(Ids(out) == std::vector<std::string>{"c", "b", "e"});
}

TEST_CASE("filter: ties go to the smaller id") {
  CHECK(Ids(FilterByConfidence(Items({{"z", 1.0}, {"y", 1.0}}), 0.5)) == std::vector<std::string>{"y"});
  CHECK(Ids(FilterByConfidence(Items({{"b", 2.0}, {"c", 1.0}, {"a", 1.0}}), 0.5)) ==
        std::vector<std::string>{"a", "c"});
}

TEST_CASE("filter: keep all is a reordering; empty stays empty") {
  const auto in = Items({{"q", 3.0}, {"p", 1.0}, {"r", 2.0}});
  const auto out = FilterByConfidence(in, 1.0);
  const auto ids = Ids(out);
  CHECK(std::set<std::string>(ids.begin(), ids.end()) == std::set<std::string>{"p", "q", "r"});
  CHECK(FilterByConfidence({}, 0.5).empty());
  CHECK_THROWS_AS(FilterByConfidence(in, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(FilterByConfidence(in, 1.5), std::invalid_argument);
}

TEST_CASE("filter: count and threshold properties on random inputs") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> n_dist(1, 40), level(0, 5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = n_dist(rng);
    std::vector<std::pair<std::string, double>> v;
    for (int i = 0; i < n; ++i) v.emplace_back("u" + std::to_string(1000 + (i * 7919) % 1000), level(rng) * 0.25);
    const double kf = trial % 2 ? 0.5 : 1.0;
    const auto items = Items(v);
    const auto kept = FilterByConfidence(items, kf);
    REQUIRE(kept.size() == static_cast<size_t>(std::ceil(kf * n)));
    const auto ids = Ids(kept);
    const std::set<std::string> kept_ids(ids.begin(), ids.end());
    for (const auto &d : items) {
      if (kept_ids.count(d.id)) continue;
      for (const auto &k : kept) {
        CHECK(k.loss_per_word <= d.loss_per_word);
        if (k.loss_per_word == d.loss_per_word) CHECK(k.id < d.id);
      }
    }
    auto shuffled = items;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(FilterByConfidence(shuffled, kf) == kept);
  }
}

TEST_CASE("mix: ratio 0 is purely labelled") {
  const auto lab = Dummy(7, "l"), ps = Dummy(5, "p");
  const auto b = MixBatches(lab, ps, 0.0, 8, 3);
  for (int s = 0; s < 20; ++s)
    for (const Utterance *u : b(s)) CHECK(u->id[0] == 'l');
  CHECK_NOTHROW(MixBatches(lab, {}, 0.0, 8, 3));
}

TEST_CASE("mix: 0.6 of 10 gives 6 pseudo and 4 labelled in every batch") {
  const auto lab = Dummy(7, "l"), ps = Dummy(13, "p");
  const auto b = MixBatches(lab, ps, 0.6, 10, 4);
  std::map<std::string, int> seen;
  int pseudo_total = 0, labeled_total = 0;
  for (int s = 0; s < 100; ++s) {
    const auto batch = b(s);
    REQUIRE(batch.size() == 10);
    int np = 0;
    for (const Utterance *u : batch) {
      np += u->id[0] == 'p';
      ++seen[u->id];
    }
    CHECK(np == 6);
    pseudo_total += np;
    labeled_total += 10 - np;
  }
  CHECK(pseudo_total == 600);
  CHECK(labeled_total == 400);
  // 600 draws over 13 items and 400 over 7: full passes are balanced.
  for (const auto &u : ps) CHECK(std::abs(seen[u.id] - 600 / 13) <= 1);
  for (const auto &u : lab) CHECK(std::abs(seen[u.id] - 400 / 7) <= 1);
}

TEST_CASE("mix: each stream cycles through full passes independently") {
  const auto lab = Dummy(5, "l"), ps = Dummy(3, "p");
  const auto b = MixBatches(lab, ps, 0.5, 4, 9);
  std::vector<std::string> ls, pss;
  for (int s = 0; s < 30; ++s)
    for (const Utterance *u : b(s)) (u->id[0] == 'l' ? ls : pss).push_back(u->id);
  for (size_t e = 0; e + 5 <= ls.size(); e += 5)
    CHECK(std::set<std::string>(ls.begin() + e, ls.begin() + e + 5).size() == 5);
  for (size_t e = 0; e + 3 <= pss.size(); e += 3)
    CHECK(std::set<std::string>(pss.begin() + e, pss.begin() + e + 3).size() == 3);
  // Passes are reshuffled.
  std::set<std::vector<std::string>> orders;
  for (size_t e = 0; e + 5 <= ls.size(); e += 5) orders.insert({ls.begin() + e, ls.begin() + e + 5});
  CHECK(orders.size() > 1);
}

TEST_CASE("mix: determinism and errors") {
  const auto lab = Dummy(6, "l"), ps = Dummy(4, "p");
  const auto a = MixBatches(lab, ps, 0.5, 6, 5), b = MixBatches(lab, ps, 0.5, 6, 5);
  for (int s = 0; s < 20; ++s) CHECK(a(s) == b(s));
  CHECK_THROWS_AS(MixBatches(lab, {}, 0.5, 6, 5), std::invalid_argument);
  CHECK_THROWS_AS(MixBatches({}, ps, 0.5, 6, 5), std::invalid_argument);
  CHECK_NOTHROW(MixBatches({}, ps, 1.0, 6, 5));
  CHECK_THROWS_AS(MixBatches(lab, ps, 1.2, 6, 5), std::invalid_argument);
  CHECK_THROWS_AS(MixBatches(lab, ps, -0.1, 6, 5), std::invalid_argument);
  CHECK(PseudoQuota(0.5, 5) == 3);
  CHECK(PseudoQuota(0.6, 10) == 6);
}

TEST_CASE("pseudo_label: an overfit teacher reproduces its training transcripts") {
  const auto data = SynthSet(4, 31, "t");
  const auto &teacher = OverfitTeacher(data);
  const FinetuneConfig fc = SmallFinetune();
  const auto r = PseudoLabel(teacher.eval_params, fc.encoder, SourcesFromUtterances(data));
  REQUIRE(r.items.size() == data.size());
  CHECK(r.skipped.empty());
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(r.items[i].id == data[i].id);
    CHECK(Decode(r.items[i].hypothesis) == data[i].transcript);
    CHECK(r.items[i].loss_per_word < 0.1);
    // Oracle: recompute from the teacher's logits.
    const Tensor logits = AsrLogits(teacher.eval_params, fc.encoder, data[i].features.ToTensor());
    const double want = CtcLoss(logits, Encode(data[i].transcript)).loss.item() / CountWords(data[i].transcript);
    CHECK(r.items[i].loss_per_word == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("pseudo_label: empty hypotheses, skips and teacher checks") {
  const auto data = SynthSet(3, 32, "e");
  FinetuneConfig fc = SmallFinetune();
  ParamStore teacher = InitAsrModel(fc.encoder, 5);
  std::vector<double> bias(kVocabSize, 0.0);
  bias[kBlankId] = 1e3;
  teacher.Set("decoder/out/b", Tensor::FromData({kVocabSize}, bias));
  auto sources = SourcesFromUtterances(data);
  sources.insert(sources.begin() + 1, {"broken", [] () -> Spectrogram { throw std::runtime_error("unreadable"); }});
  const auto r = PseudoLabel(teacher, fc.encoder, sources);
  REQUIRE(r.items.size() == 3);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].first == "broken");
  CHECK(r.skipped[0].second == "unreadable");
  CHECK(r.items.size() == sources.size() - r.skipped.size());
  for (const auto &p : r.items) {
    CHECK(p.hypothesis.empty());
    CHECK(std::isfinite(p.loss_per_word));
    CHECK(p.loss_per_word >= 0.0);
  }
  ConformerConfig other = fc.encoder;
  other.model_dim = 64;
  CHECK_THROWS_AS(PseudoLabel(teacher, other, sources), std::invalid_argument);
}

TEST_CASE("pseudo_label: manifest sources read audio and skip missing files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sslab_nst_manifest";
  fs::remove_all(dir);
  fs::create_directories(dir);
  CorpusSpec spec;
  spec.num_utterances = 2;
  spec.seed = 33;
  Manifest m;
  for (const auto &it : GenerateCorpusItems(spec)) {
    const Waveform w = Render(it);
    WriteWav(w, (dir / (it.id + ".wav")).string());
    m.entries.push_back({it.id, it.id + ".wav", std::nullopt, w.duration_s(), {}, {}, {}});
  }
  m.entries.push_back({"gone", "gone.wav", std::nullopt, 1.0, {}, {}, {}});
  const std::string mpath = (dir / "unlabeled.jsonl").string();
  const FinetuneConfig fc = SmallFinetune();
  const auto r = PseudoLabel(InitAsrModel(fc.encoder, 1), fc.encoder, SourcesFromManifest(m, mpath));
  CHECK(r.items.size() == 2);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].first == "gone");
  const Manifest ann = AnnotateManifest(m, FilterByConfidence(r.items, 1.0));
  REQUIRE(ann.size() == 2);
  for (const auto &e : ann.entries) {
    CHECK(e.hypothesis.has_value());
    CHECK(e.loss_per_word.has_value());
  }
  WriteManifest(ann, (dir / "pseudo.jsonl").string());
  CHECK(ReadManifest((dir / "pseudo.jsonl").string()) == ann);
  fs::remove_all(dir);
}

TEST_CASE("run_nst: report contract, determinism and promotion") {
  const auto labeled = SynthSet(4, 31, "t");
  const auto unl = SynthSet(6, 34, "u");
  const auto dev = SynthSet(3, 35, "d");
  NstInputs in;
  in.teacher = OverfitTeacher(labeled).eval_params;
  in.student = SmallFinetune();
  in.student.steps = 6;
  in.teacher_encoder = in.student.encoder;
  in.labeled = labeled;
  in.unlabeled = SourcesFromUtterances(unl);
  in.dev = dev;
  NstConfig cfg;
  cfg.generations = 2;
  int notifications = 0;
  const auto a = RunNst(cfg, in, [&](const NstReport &) { ++notifications; });
  const auto b = RunNst(cfg, in);
  CHECK(notifications == 2 * 4 + 1);
  REQUIRE(a.report.complete);
  REQUIRE(a.report.generations.size() == 2);
  for (const auto &g : a.report.generations) {
    CHECK(g.unlabeled == 6);
    CHECK(g.skipped == 0);
    CHECK(g.retained == 3);
    CHECK(g.keep_fraction == 0.5);
    CHECK(g.nst_ratio == 0.5);
    CHECK(g.pseudo_per_batch == 2);
    CHECK(g.labeled_per_batch == 2);
    CHECK(g.student_log.loss.size() == 6);
    for (const char *stage : {"teacher_eval", "pseudo_label", "filter", "student_train"})
      CHECK(g.stage_seconds.count(stage) == 1);
  }
  CHECK(a.report.generations[0].teacher_dev_wer == EvaluateWer(in.teacher, in.teacher_encoder, dev));
  // The second generation is taught by the first student.
  CHECK(a.report.generations[1].teacher_dev_wer == a.report.generations[0].student_dev_wer);
  CHECK(NstReportToJson(a.report) == NstReportToJson(b.report));
  CHECK(NstReportToJson(a.report).find("stage_seconds") == std::string::npos);
  CHECK(NstTimingsToJson(a.report).find("student_train") != std::string::npos);
}

TEST_CASE("run_nst: a failing stage leaves a partial report") {
  NstInputs in;
  in.student = SmallFinetune();
  in.student.steps = 2;
  in.teacher_encoder = in.student.encoder;
  in.teacher = InitAsrModel(in.teacher_encoder, 1);
  in.unlabeled = SourcesFromUtterances(SynthSet(2, 36, "u"));
  NstConfig cfg;  // ratio 0.5 needs labelled data, none given
  NstReport last;
  CHECK_THROWS_AS(RunNst(cfg, in, [&](const NstReport &r) { last = r; }), std::invalid_argument);
  CHECK_FALSE(last.complete);
  CHECK(last.failed_stage == "student_train");
  REQUIRE(last.generations.size() == 1);
  CHECK(last.generations[0].retained == 1);
  CHECK(NstReportToJson(last).find("\"complete\": false") != std::string::npos);
  cfg.keep_fraction = 0.3;
  CHECK_THROWS_AS(RunNst(cfg, in), std::invalid_argument);
  cfg.keep_fraction = 0.5;
  cfg.generations = 0;
  CHECK_THROWS_AS(RunNst(cfg, in), std::invalid_argument);
}
