// include/sslab/cli/config.h

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

// Experiment configuration: a JSON document, parsed strictly.  Unknown
// fields and type errors are reported with their dotted field path.

#ifndef SSLAB_CLI_CONFIG_H_
#define SSLAB_CLI_CONFIG_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sslab/asr/train.h"
#include "sslab/audio/synth.h"
#include "sslab/nst/nst.h"
#include "sslab/pretrain/pretrain.h"
#include "sslab/probe/probe.h"

namespace sslab {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string &path, const std::string &what);
  const std::string &path() const { return path_; }

 private:
  std::string path_;
};

inline constexpr const char *kCommands[] = {"gen-corpus", "pretrain", "finetune", "nst", "probe", "evaluate"};

struct CorpusSection {
  CorpusSpec spec;
  bool labeled = true;
  std::string name = "manifest";
};

// Manifest paths, resolved against the config file's directory.
struct DataSection {
  std::string train, unlabeled, dev, test;
};

struct FinetuneSection {
  FinetuneConfig cfg;
  // Label-efficiency study: one run per (fraction, init) cell.
  std::vector<double> labeled_fractions;
  std::vector<InitMode> sweep_inits;
};

struct NstSection {
  NstConfig cfg;
  std::string student_checkpoint;  // empty: students start from scratch
};

struct MlpSection {
  std::string tag;  // comma-separated label set per clip
  int layer = 0;
  MlpHeadConfig head;
};

struct ProbeSection {
  std::vector<std::string> tasks;  // manifest tag names
  ProbeOptions options;
  std::optional<MlpSection> mlp;
};

struct EvaluateSection {
  int beam_width = 8;
  bool tune_fusion = true;
  int trials = 20;
  int lm_order = 4;
  double lm_add_k = 0.1;
};

struct ConfigOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> preset;
};

struct ExperimentConfig {
  std::string command;
  std::string run_id;
  uint64_t seed = 0;
  std::string preset = "XS";
  ConformerConfig encoder;
  CorpusSection corpus;
  DataSection data;
  std::string checkpoint;
  PretrainConfig pretrain;
  FinetuneSection finetune;
  NstSection nst;
  ProbeSection probe;
  EvaluateSection evaluate;

  std::string canonical_json;  // effective document after overrides
  std::string digest;          // SHA-256 of canonical_json, hex
};

// `base_dir` anchors relative paths.  Throws ConfigError.
ExperimentConfig ParseConfig(const std::string &text, const std::string &base_dir,
                             const ConfigOverrides &overrides = {});
ExperimentConfig LoadConfig(const std::string &path, const ConfigOverrides &overrides = {});

// Checks that every file the command reads exists.  Throws ConfigError.
void CheckInputsExist(const ExperimentConfig &cfg);

std::string Sha256Hex(const std::string &data);

}  // namespace sslab

#endif  // SSLAB_CLI_CONFIG_H_
