// include/sslab/cli/runner.h

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

// Executes one experiment command into an output directory.
//
// Every command writes, under out_dir:
//   config.json   effective configuration
//   metrics.json  MetricsReport (no wall-clock content)
//   plot.tsv      long-format table of the report series
//   timings.json  wall-clock seconds per stage
// plus its own artifacts (manifests, checkpoints, hypotheses, reports).

#ifndef SSLAB_CLI_RUNNER_H_
#define SSLAB_CLI_RUNNER_H_

#include <ostream>
#include <string>
#include <vector>

#include "sslab/asr/train.h"
#include "sslab/cli/config.h"
#include "sslab/cli/report.h"

namespace sslab {

// Throws after writing a report flagged incomplete when the run fails.
MetricsReport RunCommand(const ExperimentConfig &cfg, const std::string &out_dir, std::ostream &log);

// Reads metrics.json files and writes their combined plot table.
void EmitPlotData(const std::vector<std::string> &report_paths, const std::string &out_path);

// Manifest entries as features; transcripts are required when `labeled`.
std::vector<Utterance> LoadUtterances(const std::string &manifest_path, bool labeled);

}  // namespace sslab

#endif  // SSLAB_CLI_RUNNER_H_
