// include/sslab/nst/nst.h

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

// Noisy student training: teacher pseudo-labels, confidence filtering,
// labeled/pseudo batch mixing and the generation loop.

#ifndef SSLAB_NST_NST_H_
#define SSLAB_NST_NST_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sslab/asr/train.h"
#include "sslab/audio/manifest.h"
#include "sslab/audio/tokenizer.h"

namespace sslab {

struct PseudoLabeledUtterance {
  std::string id;
  TokenSequence hypothesis;
  double loss_per_word = 0.0;  // teacher CTC loss / max(1, words)

  bool operator==(const PseudoLabeledUtterance &) const = default;
};

struct NstConfig {
  double keep_fraction = 0.5;
  double nst_ratio = 0.5;
  int generations = 1;
  // Later generations use the previous student as teacher.
  bool promote_student = true;

  void Validate() const;
};

// Unlabeled audio whose features are produced on demand; `load` may throw.
struct UnlabeledSource {
  std::string id;
  std::function<Spectrogram()> load;
};

// Reads each entry's audio relative to the manifest and normalises it.
std::vector<UnlabeledSource> SourcesFromManifest(const Manifest &m, const std::string &manifest_path);
std::vector<UnlabeledSource> SourcesFromUtterances(const std::vector<Utterance> &data);

struct PseudoLabelResult {
  std::vector<PseudoLabeledUtterance> items;
  std::vector<Spectrogram> features;                       // parallel to items
  std::vector<std::pair<std::string, std::string>> skipped;  // id, reason
};

// Greedy decoding without fusion.  Sources that fail to load are skipped
// and recorded; teacher parameters not matching `cfg` throw.
PseudoLabelResult PseudoLabel(const ParamStore &teacher, const ConformerConfig &cfg,
                              const std::vector<UnlabeledSource> &sources);

// Ascending loss_per_word, ties by id; keeps the first ceil(keep_fraction*N).
std::vector<PseudoLabeledUtterance> FilterByConfidence(std::vector<PseudoLabeledUtterance> items,
                                                       double keep_fraction);

// Number of pseudo-labelled examples per batch.
int PseudoQuota(double nst_ratio, int batch_size);

// Every batch holds PseudoQuota pseudo examples followed by labelled ones.
// Each stream is reshuffled at every pass with its own derived seed.
BatchProvider MixBatches(const std::vector<Utterance> &labeled, const std::vector<Utterance> &pseudo,
                         double nst_ratio, int batch_size, uint64_t seed);

// Pseudo-labelled training utterances (transcript = hypothesis text).
std::vector<Utterance> PseudoUtterances(const PseudoLabelResult &labels,
                                        const std::vector<PseudoLabeledUtterance> &retained);

// Copies of the matching unlabeled entries carrying hypothesis and
// loss_per_word, in `retained` order.
Manifest AnnotateManifest(const Manifest &unlabeled, const std::vector<PseudoLabeledUtterance> &retained);

struct GenerationReport {
  int generation = 0;
  double teacher_dev_wer = 0.0;
  double student_dev_wer = 0.0;
  int64_t unlabeled = 0;
  int64_t skipped = 0;
  int64_t retained = 0;
  double keep_fraction = 0.0;
  double nst_ratio = 0.0;
  int pseudo_per_batch = 0;
  int labeled_per_batch = 0;
  std::vector<PseudoLabeledUtterance> retained_items;
  TrainLog student_log;
  std::map<std::string, double> stage_seconds;
};

struct NstReport {
  std::vector<GenerationReport> generations;
  bool complete = false;
  std::string failed_stage;
  std::string error;
};

// Stage timings are left out so that reruns produce identical text.
std::string NstReportToJson(const NstReport &r);
std::string NstTimingsToJson(const NstReport &r);

struct NstInputs {
  ParamStore teacher;
  ConformerConfig teacher_encoder;
  std::vector<Utterance> labeled;
  std::vector<UnlabeledSource> unlabeled;
  std::vector<Utterance> dev;
  // Student fine-tuning; `init` and the checkpoint pick its starting point.
  FinetuneConfig student;
  const Checkpoint *student_checkpoint = nullptr;
};

struct NstResult {
  ParamStore student;
  Checkpoint student_checkpoint;
  NstReport report;
};

// Runs cfg.generations rounds.  `on_report` sees the report after every
// stage and once more on failure, before the exception propagates.
NstResult RunNst(const NstConfig &cfg, const NstInputs &in,
                 const std::function<void(const NstReport &)> &on_report = {});

}  // namespace sslab

#endif  // SSLAB_NST_NST_H_
