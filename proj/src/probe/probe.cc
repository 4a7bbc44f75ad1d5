// src/probe/probe.cc

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

#include "sslab/probe/probe.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "sslab/numerics/ops.h"
#include "sslab/numerics/optim.h"

namespace sslab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd ToMatrix(const FeatureRows &x, const Standardizer &z) {
  const int64_t n = static_cast<int64_t>(x.size()), d = static_cast<int64_t>(z.mean.size());
  MatrixXd m(n, d);
  for (int64_t i = 0; i < n; ++i) {
    if (static_cast<int64_t>(x[i].size()) != d)
      throw std::invalid_argument("probe: feature rows have inconsistent dimensions");
    const auto r = z.Apply(x[i]);
    for (int64_t j = 0; j < d; ++j) m(i, j) = r[j];
  }
  return m;
}

void FillProbe(LinearProbe &p, const MatrixXd &w, const VectorXd &b) {
  p.weights.assign(w.rows(), std::vector<double>(w.cols()));
  for (int64_t k = 0; k < w.rows(); ++k)
    for (int64_t j = 0; j < w.cols(); ++j) p.weights[k][j] = w(k, j);
  p.bias.assign(b.data(), b.data() + b.size());
}

void FitLogistic(LinearProbe &p, const MatrixXd &x, const std::vector<int> &y, const std::vector<int> &counts,
                 bool balanced, const ProbeOptions &opt) {
  const int64_t n = x.rows(), d = x.cols();
  const int k = p.num_classes;
  VectorXd weight(n);
  for (int64_t i = 0; i < n; ++i)
    weight(i) = balanced ? static_cast<double>(n) / (k * counts[y[i]]) : 1.0;
  MatrixXd w = MatrixXd::Zero(k, d);
  VectorXd b = VectorXd::Zero(k);
  MatrixXd onehot = MatrixXd::Zero(n, k);
  for (int64_t i = 0; i < n; ++i) onehot(i, y[i]) = 1.0;
  for (int it = 0; it < opt.iterations; ++it) {
    MatrixXd z = x * w.transpose();
    z.rowwise() += b.transpose();
    for (int64_t i = 0; i < n; ++i) {
      const double mx = z.row(i).maxCoeff();
      z.row(i) = (z.row(i).array() - mx).exp();
      z.row(i) /= z.row(i).sum();
    }
    const MatrixXd g = weight.asDiagonal() * (z - onehot) / static_cast<double>(n);
    w -= opt.learning_rate * (g.transpose() * x + opt.l2 * w);
    b -= opt.learning_rate * g.colwise().sum().transpose();
  }
  FillProbe(p, w, b);
}

void FitLda(LinearProbe &p, const MatrixXd &x, const std::vector<int> &y, const std::vector<int> &counts,
            const ProbeOptions &opt) {
  const int64_t n = x.rows(), d = x.cols();
  const int k = p.num_classes;
  MatrixXd mu = MatrixXd::Zero(k, d);
  for (int64_t i = 0; i < n; ++i) mu.row(y[i]) += x.row(i);
  for (int c = 0; c < k; ++c) mu.row(c) /= counts[c];
  MatrixXd centred = x;
  for (int64_t i = 0; i < n; ++i) centred.row(i) -= mu.row(y[i]);
  const double dof = n > k ? static_cast<double>(n - k) : static_cast<double>(n);
  MatrixXd sigma = centred.transpose() * centred / dof;
  sigma += opt.lda_ridge * MatrixXd::Identity(d, d);
  const MatrixXd a = sigma.ldlt().solve(mu.transpose());  // d x k
  MatrixXd w = a.transpose();
  VectorXd b(k);
  for (int c = 0; c < k; ++c)
    b(c) = -0.5 * mu.row(c).dot(w.row(c)) + std::log(static_cast<double>(counts[c]) / n);
  FillProbe(p, w, b);
}

nlohmann::json EntryJson(const ProbeEntry &e) {
  return {{"layer", e.layer}, {"method", ToString(e.method)}, {"dev_accuracy", e.dev_accuracy},
          {"test_accuracy", e.test_accuracy}};
}

}  // namespace

std::vector<double> MeanPool(const Tensor &activation) {
  if (activation.ndim() != 2 || activation.rows() < 1)
    throw std::invalid_argument("MeanPool expects a non-empty (T, d) activation");
  const int64_t t = activation.rows(), d = activation.cols();
  std::vector<double> out(d, 0.0);
  for (int64_t i = 0; i < t; ++i)
    for (int64_t j = 0; j < d; ++j) out[j] += activation.at(i, j);
  for (double &v : out) v /= static_cast<double>(t);
  return out;
}

std::vector<FeatureRows> ExtractPooledAllLayers(const ParamStore &p, const ConformerConfig &cfg,
                                                const std::vector<Spectrogram> &clips) {
  NoGradGuard ng;
  std::vector<FeatureRows> out(cfg.num_layers + 2);
  for (const auto &clip : clips) {
    const LayerActivations act = Encode(p, cfg, clip.ToTensor());
    for (int l = -1; l <= cfg.num_layers; ++l) out[l + 1].push_back(MeanPool(act.at(l)));
  }
  return out;
}

FeatureRows ExtractPooled(const ParamStore &p, const ConformerConfig &cfg, const std::vector<Spectrogram> &clips,
                          int layer) {
  if (layer < -1 || layer > cfg.num_layers)
    throw std::invalid_argument("probe layer " + std::to_string(layer) + " outside -1.." +
                                std::to_string(cfg.num_layers));
  NoGradGuard ng;
  FeatureRows out;
  for (const auto &clip : clips) out.push_back(MeanPool(Encode(p, cfg, clip.ToTensor()).at(layer)));
  return out;
}

Standardizer Standardizer::Fit(const FeatureRows &x) {
  if (x.empty() || x[0].empty()) throw std::invalid_argument("standardizer needs at least one non-empty row");
  const size_t d = x[0].size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  for (const auto &r : x) {
    if (r.size() != d) throw std::invalid_argument("probe: feature rows have inconsistent dimensions");
    for (size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  for (double &m : s.mean) m /= static_cast<double>(x.size());
  for (const auto &r : x)
    for (size_t j = 0; j < d; ++j) s.scale[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  for (double &v : s.scale) {
    v = std::sqrt(v / static_cast<double>(x.size()));
    if (v < 1e-12) v = 1.0;  // constant dimension
  }
  return s;
}

std::vector<double> Standardizer::Apply(const std::vector<double> &row) const {
  if (row.size() != mean.size()) throw std::invalid_argument("probe: feature dimension mismatch");
  std::vector<double> out(row.size());
  for (size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / scale[j];
  return out;
}

std::string ToString(ProbeMethod m) {
  switch (m) {
    case ProbeMethod::kLogistic:
      return "logistic";
    case ProbeMethod::kBalancedLogistic:
      return "balanced-logistic";
    case ProbeMethod::kLda:
      return "lda";
  }
  return "?";
}

ProbeMethod ProbeMethodFromString(const std::string &s) {
  for (ProbeMethod m : kProbeMethods)
    if (ToString(m) == s) return m;
  throw std::invalid_argument("unknown probe method '" + s + "'");
}

std::vector<double> LinearProbe::Scores(const std::vector<double> &x) const {
  const auto z = standardizer.Apply(x);
  std::vector<double> s(num_classes);
  for (int k = 0; k < num_classes; ++k)
    s[k] = std::inner_product(z.begin(), z.end(), weights[k].begin(), bias[k]);
  return s;
}

int LinearProbe::Predict(const std::vector<double> &x) const {
  const auto s = Scores(x);
  return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
}

LinearProbe TrainProbe(const FeatureRows &x, const std::vector<int> &y, int num_classes, ProbeMethod method,
                       const ProbeOptions &opt) {
  if (num_classes < 2) throw std::invalid_argument("probe needs at least two classes");
  if (x.size() != y.size()) throw std::invalid_argument("probe: feature and label counts differ");
  std::vector<int> counts(num_classes, 0);
  for (int c : y) {
    if (c < 0 || c >= num_classes) throw std::invalid_argument("probe label " + std::to_string(c) + " out of range");
    ++counts[c];
  }
  for (int c = 0; c < num_classes; ++c)
    if (counts[c] == 0) throw std::invalid_argument("probe: class " + std::to_string(c) + " absent from training labels");
  LinearProbe p;
  p.method = method;
  p.num_classes = num_classes;
  p.standardizer = Standardizer::Fit(x);
  const MatrixXd m = ToMatrix(x, p.standardizer);
  if (method == ProbeMethod::kLda)
    FitLda(p, m, y, counts, opt);
  else
    FitLogistic(p, m, y, counts, method == ProbeMethod::kBalancedLogistic, opt);
  return p;
}

double Accuracy(const LinearProbe &probe, const FeatureRows &x, const std::vector<int> &y) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("accuracy needs matching non-empty inputs");
  int64_t hit = 0;
  for (size_t i = 0; i < x.size(); ++i) hit += probe.Predict(x[i]) == y[i];
  return static_cast<double>(hit) / static_cast<double>(x.size());
}

double Recall(const LinearProbe &probe, const FeatureRows &x, const std::vector<int> &y, int c) {
  int64_t pos = 0, hit = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (y[i] != c) continue;
    ++pos;
    hit += probe.Predict(x[i]) == c;
  }
  if (pos == 0) throw std::invalid_argument("recall: class has no examples");
  return static_cast<double>(hit) / static_cast<double>(pos);
}

ProbeEntry SelectBest(const std::vector<ProbeEntry> &table) {
  if (table.empty()) throw std::invalid_argument("select_best: empty table");
  const ProbeEntry *best = &table[0];
  for (const auto &e : table) {
    if (e.dev_accuracy > best->dev_accuracy ||
        (e.dev_accuracy == best->dev_accuracy &&
         (e.layer < best->layer || (e.layer == best->layer && e.method < best->method))))
      best = &e;
  }
  return *best;
}

std::vector<ProbeEntry> EvaluateProbeTask(const ProbeTask &task, const ProbeOptions &opt) {
  const size_t nl = task.train.features.size();
  if (nl == 0 || task.dev.features.size() != nl || task.test.features.size() != nl)
    throw std::invalid_argument("probe task '" + task.name + "': splits cover different layers");
  std::vector<ProbeEntry> table;
  for (size_t li = 0; li < nl; ++li) {
    for (ProbeMethod m : kProbeMethods) {
      const LinearProbe p = TrainProbe(task.train.features[li], task.train.labels, task.num_classes, m, opt);
      table.push_back({static_cast<int>(li) - 1, m, Accuracy(p, task.dev.features[li], task.dev.labels),
                       Accuracy(p, task.test.features[li], task.test.labels)});
    }
  }
  return table;
}

std::map<int, double> BestMethodPerLayer(const std::vector<ProbeEntry> &table) {
  std::map<int, std::vector<ProbeEntry>> by_layer;
  for (const auto &e : table) by_layer[e.layer].push_back(e);
  std::map<int, double> out;
  for (const auto &[l, entries] : by_layer) out[l] = SelectBest(entries).test_accuracy;
  return out;
}

std::map<int, double> AverageAccuracy(const std::map<std::string, std::map<int, double>> &per_task, int num_layers) {
  if (per_task.empty()) throw std::invalid_argument("average_accuracy: no tasks");
  std::map<int, double> out;
  for (int l = -1; l <= num_layers; ++l) {
    double s = 0.0;
    for (const auto &[name, curve] : per_task) {
      const auto it = curve.find(l);
      if (it == curve.end())
        throw std::invalid_argument("average_accuracy: task '" + name + "' lacks layer " + std::to_string(l));
      s += it->second;
    }
    out[l] = s / static_cast<double>(per_task.size());
  }
  return out;
}

ProbeReport RunProbe(const std::vector<ProbeTask> &tasks, int num_layers, const ProbeOptions &opt) {
  ProbeReport r;
  std::map<std::string, std::map<int, double>> curves;
  for (const auto &t : tasks) {
    if (r.tasks.count(t.name)) throw std::invalid_argument("duplicate probe task '" + t.name + "'");
    auto &rt = r.tasks[t.name];
    rt.table = EvaluateProbeTask(t, opt);
    rt.selected = SelectBest(rt.table);
    curves[t.name] = BestMethodPerLayer(rt.table);
  }
  r.average_accuracy = AverageAccuracy(curves, num_layers);
  return r;
}

std::string ProbeReportToJson(const ProbeReport &r) {
  nlohmann::json j;
  j["tasks"] = nlohmann::json::object();
  for (const auto &[name, t] : r.tasks) {
    nlohmann::json tj;
    tj["table"] = nlohmann::json::array();
    for (const auto &e : t.table) tj["table"].push_back(EntryJson(e));
    tj["selected"] = EntryJson(t.selected);
    j["tasks"][name] = std::move(tj);
  }
  j["average_accuracy"] = nlohmann::json::array();
  for (const auto &[l, v] : r.average_accuracy) j["average_accuracy"].push_back({{"layer", l}, {"accuracy", v}});
  return j.dump(2) + "\n";
}

ParamStore InitMlpHead(int input_dim, int hidden, int num_classes, uint64_t seed) {
  if (num_classes < 1) throw std::invalid_argument("mlp head needs at least one class");
  if (input_dim < 1 || hidden < 1) throw std::invalid_argument("mlp head dimensions must be positive");
  std::mt19937_64 rng(seed);
  ParamStore p;
  p.Set("head/l1/w", GlorotUniform(input_dim, hidden, {input_dim, hidden}, rng));
  p.Set("head/l1/b", Tensor::Zeros({hidden}, true));
  p.Set("head/l2/w", GlorotUniform(hidden, num_classes, {hidden, num_classes}, rng));
  p.Set("head/l2/b", Tensor::Zeros({num_classes}, true));
  return p;
}

Tensor MlpHeadLogits(const ParamStore &p, const Tensor &frames) {
  const Tensor h = ops::Relu(ops::Linear(frames, p.Get("head/l1/w"), p.Get("head/l1/b")));
  return ops::Linear(h, p.Get("head/l2/w"), p.Get("head/l2/b"));
}

Tensor MlpHeadLoss(const ParamStore &p, const std::vector<MultiLabelClip> &clips) {
  if (clips.empty()) throw std::invalid_argument("mlp head loss: no clips");
  std::vector<Tensor> frames;
  std::vector<double> targets;
  for (const auto &c : clips) {
    frames.push_back(c.frames);
    for (int64_t t = 0; t < c.frames.rows(); ++t)
      for (int v : c.targets) targets.push_back(v);
  }
  const Tensor x = ops::ConcatRows(frames);
  const Tensor logits = MlpHeadLogits(p, x);
  if (static_cast<int64_t>(targets.size()) != logits.size())
    throw std::invalid_argument("mlp head loss: target width does not match the head");
  return ops::BceWithLogits(logits, Tensor::FromData(logits.shape(), std::move(targets)));
}

std::vector<double> MultiLabelHead::ClipScores(const Tensor &frames) const {
  NoGradGuard ng;
  return MeanPool(ops::Sigmoid(MlpHeadLogits(params, frames)));
}

MultiLabelHead TrainMlpHead(const std::vector<MultiLabelClip> &clips, int num_classes, const MlpHeadConfig &cfg,
                            std::vector<double> *loss_log) {
  if (num_classes < 1) throw std::invalid_argument("mlp head needs at least one class");
  if (clips.empty()) throw std::invalid_argument("mlp head: no training clips");
  for (const auto &c : clips) {
    if (static_cast<int>(c.targets.size()) != num_classes)
      throw std::invalid_argument("clip '" + c.id + "' has " + std::to_string(c.targets.size()) + " targets, expected " +
                                  std::to_string(num_classes));
    for (int v : c.targets)
      if (v != 0 && v != 1) throw std::invalid_argument("clip '" + c.id + "' has a non-binary target");
  }
  MultiLabelHead head;
  head.num_classes = num_classes;
  head.params = InitMlpHead(static_cast<int>(clips[0].frames.cols()), cfg.hidden, num_classes, cfg.seed);
  const auto names = head.params.Names();
  auto tensors = head.params.Tensors(names);
  OptimizerState adam = MakeAdamState(tensors);
  for (int e = 0; e < cfg.epochs; ++e) {
    const Tensor loss = MlpHeadLoss(head.params, clips);
    if (loss_log) loss_log->push_back(loss.item());
    const Gradients g = Backward(loss, tensors);
    std::vector<Tensor> grads;
    for (const auto &t : tensors) grads.push_back(g.of(t));
    tensors = AdamStep(tensors, grads, adam, cfg.learning_rate);
    head.params.Update(names, tensors);
  }
  return head;
}

double AveragePrecision(const std::vector<double> &scores, const std::vector<int> &labels,
                        const std::vector<std::string> &ids) {
  const size_t n = scores.size();
  if (labels.size() != n || ids.size() != n) throw std::invalid_argument("average precision: size mismatch");
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });
  int64_t hits = 0;
  long double sum = 0.0L;
  for (size_t r = 0; r < n; ++r) {
    if (!labels[order[r]]) continue;
    ++hits;
    sum += static_cast<long double>(hits) / static_cast<long double>(r + 1);
  }
  if (hits == 0) throw std::invalid_argument("average precision: no positives");
  return static_cast<double>(sum / hits);
}

MapResult MeanAveragePrecision(const std::vector<std::string> &ids, const FeatureRows &scores,
                               const std::vector<std::vector<int>> &labels) {
  const size_t n = ids.size();
  if (n == 0 || scores.size() != n || labels.size() != n) throw std::invalid_argument("mAP: clip count mismatch");
  const size_t c = labels[0].size();
  MapResult r;
  r.per_class.assign(c, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  int included = 0;
  for (size_t k = 0; k < c; ++k) {
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (size_t i = 0; i < n; ++i) {
      if (scores[i].size() != c || labels[i].size() != c) throw std::invalid_argument("mAP: class count mismatch");
      s[i] = scores[i][k];
      l[i] = labels[i][k];
    }
    if (std::find(l.begin(), l.end(), 1) == l.end()) {
      r.excluded.push_back(static_cast<int>(k));
      continue;
    }
    r.per_class[k] = AveragePrecision(s, l, ids);
    sum += r.per_class[k];
    ++included;
  }
  if (included == 0) throw std::invalid_argument("mAP: no class has a positive clip");
  r.map = sum / included;
  return r;
}

MapResult EvalMap(const MultiLabelHead &head, const std::vector<MultiLabelClip> &clips) {
  std::vector<std::string> ids;
  FeatureRows scores;
  std::vector<std::vector<int>> labels;
  for (const auto &c : clips) {
    ids.push_back(c.id);
    scores.push_back(head.ClipScores(c.frames));
    labels.push_back(c.targets);
  }
  return MeanAveragePrecision(ids, scores, labels);
}

}  // namespace sslab
