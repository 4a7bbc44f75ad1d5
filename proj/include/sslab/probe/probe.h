// include/sslab/probe/probe.h

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

// Layer-wise probing of encoder representations: mean-pooled clip vectors,
// linear classifiers with best-dev selection, per-layer average accuracy,
// and a frame-level multi-label MLP head scored by mAP.

#ifndef SSLAB_PROBE_PROBE_H_
#define SSLAB_PROBE_PROBE_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sslab/audio/logmel.h"
#include "sslab/conformer/conformer.h"
#include "sslab/numerics/params.h"

namespace sslab {

using FeatureRows = std::vector<std::vector<double>>;

// Time mean of a (T, d) activation.
std::vector<double> MeanPool(const Tensor &activation);

// One pooled vector per clip from `layer` (-1 .. cfg.num_layers).
FeatureRows ExtractPooled(const ParamStore &p, const ConformerConfig &cfg, const std::vector<Spectrogram> &clips,
                          int layer);
// Every layer from a single encoder pass; element l + 1 holds layer l.
std::vector<FeatureRows> ExtractPooledAllLayers(const ParamStore &p, const ConformerConfig &cfg,
                                                const std::vector<Spectrogram> &clips);

// Per-dimension z-scoring fitted on training rows.
struct Standardizer {
  std::vector<double> mean, scale;

  static Standardizer Fit(const FeatureRows &x);
  std::vector<double> Apply(const std::vector<double> &row) const;
};

enum class ProbeMethod { kLogistic, kBalancedLogistic, kLda };
inline constexpr ProbeMethod kProbeMethods[] = {ProbeMethod::kLogistic, ProbeMethod::kBalancedLogistic,
                                                ProbeMethod::kLda};
std::string ToString(ProbeMethod m);
ProbeMethod ProbeMethodFromString(const std::string &s);

struct ProbeOptions {
  double l2 = 1e-4;
  int iterations = 1000;
  double learning_rate = 0.5;
  double lda_ridge = 1e-3;
};

// Linear scores w_k . z(x) + b_k over standardised inputs.
struct LinearProbe {
  ProbeMethod method = ProbeMethod::kLogistic;
  int num_classes = 0;
  Standardizer standardizer;
  std::vector<std::vector<double>> weights;  // num_classes x dim
  std::vector<double> bias;

  std::vector<double> Scores(const std::vector<double> &x) const;
  int Predict(const std::vector<double> &x) const;  // lowest index on ties
};

// Labels in [0, num_classes); every class must occur in `y`.
LinearProbe TrainProbe(const FeatureRows &x, const std::vector<int> &y, int num_classes, ProbeMethod method,
                       const ProbeOptions &opt = {});
double Accuracy(const LinearProbe &probe, const FeatureRows &x, const std::vector<int> &y);
// Fraction of class `c` examples predicted as `c`.
double Recall(const LinearProbe &probe, const FeatureRows &x, const std::vector<int> &y, int c);

struct ProbeEntry {
  int layer = 0;
  ProbeMethod method = ProbeMethod::kLogistic;
  double dev_accuracy = 0.0;
  double test_accuracy = 0.0;

  bool operator==(const ProbeEntry &) const = default;
};

// Highest dev accuracy; ties go to the lower layer, then method order.
ProbeEntry SelectBest(const std::vector<ProbeEntry> &table);

struct ProbeSplit {
  std::vector<FeatureRows> features;  // per layer, element l + 1 holds layer l
  std::vector<int> labels;
};

struct ProbeTask {
  std::string name;
  int num_classes = 0;
  ProbeSplit train, dev, test;
};

// Every (layer, method) cell.
std::vector<ProbeEntry> EvaluateProbeTask(const ProbeTask &task, const ProbeOptions &opt = {});

// For each layer, the test accuracy of the method with the best dev
// accuracy there.
std::map<int, double> BestMethodPerLayer(const std::vector<ProbeEntry> &table);

// Unweighted mean over tasks for every layer -1 .. num_layers.  A task
// missing any of those layers throws.
std::map<int, double> AverageAccuracy(const std::map<std::string, std::map<int, double>> &per_task, int num_layers);

struct ProbeReport {
  struct Task {
    std::vector<ProbeEntry> table;
    ProbeEntry selected;
  };
  std::map<std::string, Task> tasks;
  std::map<int, double> average_accuracy;
};

ProbeReport RunProbe(const std::vector<ProbeTask> &tasks, int num_layers, const ProbeOptions &opt = {});
std::string ProbeReportToJson(const ProbeReport &r);

// Multi-label protocol.

struct MultiLabelClip {
  std::string id;
  Tensor frames;             // (T, d) frame features
  std::vector<int> targets;  // C binary labels
};

struct MlpHeadConfig {
  int hidden = 512;
  int epochs = 300;
  double learning_rate = 1e-3;
  uint64_t seed = 1;
};

// "head/l1/{w,b}" (d -> hidden, ReLU) and "head/l2/{w,b}" (hidden -> C).
ParamStore InitMlpHead(int input_dim, int hidden, int num_classes, uint64_t seed);
Tensor MlpHeadLogits(const ParamStore &p, const Tensor &frames);
// Mean binary cross-entropy over every frame and class.
Tensor MlpHeadLoss(const ParamStore &p, const std::vector<MultiLabelClip> &clips);

struct MultiLabelHead {
  ParamStore params;
  int num_classes = 0;

  // Per-class sigmoid outputs averaged over frames.
  std::vector<double> ClipScores(const Tensor &frames) const;
};

// Full-batch Adam; the per-epoch loss goes to `loss_log` when given.
MultiLabelHead TrainMlpHead(const std::vector<MultiLabelClip> &clips, int num_classes, const MlpHeadConfig &cfg,
                            std::vector<double> *loss_log = nullptr);

// Precision averaged over the ranks of the positives, ranking by descending
// score with ties kept in ascending id order.
double AveragePrecision(const std::vector<double> &scores, const std::vector<int> &labels,
                        const std::vector<std::string> &ids);

struct MapResult {
  double map = 0.0;
  std::vector<double> per_class;  // NaN for excluded classes
  std::vector<int> excluded;      // classes without a positive
};

// scores and labels are clips x classes.  Throws if no class has a positive.
MapResult MeanAveragePrecision(const std::vector<std::string> &ids, const FeatureRows &scores,
                               const std::vector<std::vector<int>> &labels);
MapResult EvalMap(const MultiLabelHead &head, const std::vector<MultiLabelClip> &clips);

}  // namespace sslab

#endif  // SSLAB_PROBE_PROBE_H_
