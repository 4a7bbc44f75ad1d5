// src/cli/config.cc

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

#include "sslab/cli/config.h"

#include <openssl/evp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sslab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Reads one JSON object, remembering which keys were consumed.
class Fields {
 public:
  Fields(const json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(Where(), "expected an object");
  }

  bool Has(const char *key) const { return j_.contains(key); }

  std::string Sub(const char *key) const { return path_.empty() ? key : path_ + "." + key; }

  Fields Object(const char *key) {
    used_.insert(key);
    return Fields(j_.at(key), Sub(key));
  }

  template <typename T>
  void Get(const char *key, T &out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    out = Convert<T>(j_.at(key), Sub(key));
  }

  template <typename T>
  T Require(const char *key) {
    if (!j_.contains(key)) throw ConfigError(Sub(key), "missing required field");
    T out{};
    Get(key, out);
    return out;
  }

  // Rejects keys nobody asked for.
  void Finish() const {
    for (const auto &[k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(Sub(k.c_str()), "unknown field");
  }

  template <typename T>
  static T Convert(const json &v, const std::string &path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, uint64_t>) {
      if (!v.is_number_unsigned()) throw ConfigError(path, "expected a non-negative integer");
      return v.get<uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      const auto x = v.get<int64_t>();
      if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max())
        throw ConfigError(path, "integer out of range");
      return static_cast<T>(x);
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(path, "expected an array");
      T out;
      for (size_t i = 0; i < v.size(); ++i)
        out.push_back(Convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

 private:
  std::string Where() const { return path_.empty() ? "<root>" : path_; }

  const json &j_;
  std::string path_;
  std::set<std::string> used_;
};

// Runs `fn`, re-labelling library validation errors with `path`.
template <typename F>
void Validated(const std::string &path, F fn) {
  try {
    fn();
  } catch (const ConfigError &) {
    throw;
  } catch (const std::invalid_argument &e) {
    throw ConfigError(path, e.what());
  }
}

void ReadSchedule(Fields f, LrSchedule &s) {
  f.Get("peak_lr", s.peak_lr);
  f.Get("warmup_steps", s.warmup_steps);
  if (f.Has("kind")) {
    std::string k;
    f.Get("kind", k);
    Validated(f.Sub("kind"), [&] { s.kind = LrScheduleKindFromString(k); });
  }
  f.Finish();
  if (!(s.peak_lr > 0.0)) throw ConfigError(f.Sub("peak_lr"), "must be positive");
  if (s.warmup_steps < 1) throw ConfigError(f.Sub("warmup_steps"), "must be at least 1");
}

void ReadEncoder(Fields f, ConformerConfig &c) {
  f.Get("num_layers", c.num_layers);
  f.Get("model_dim", c.model_dim);
  f.Get("attention_heads", c.attention_heads);
  f.Get("conv_kernel_size", c.conv_kernel_size);
  f.Get("relative_attention", c.relative_attention);
  f.Get("ff_expansion", c.ff_expansion);
  f.Get("subsample_channels", c.subsample_channels);
  f.Get("dropout", c.dropout);
  f.Finish();
}

void ReadAugment(Fields f, AugmentPolicy &a) {
  f.Get("freq_mask_count", a.freq_mask_count);
  f.Get("freq_mask_param", a.freq_mask_param);
  f.Get("time_mask_count", a.time_mask_count);
  f.Get("max_time_mask_ratio", a.max_time_mask_ratio);
  f.Finish();
}

std::string ResolvePath(const std::string &base_dir, const std::string &p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base_dir) / p).lexically_normal().string();
}

void ReadCorpus(Fields f, CorpusSection &c) {
  f.Get("num_utterances", c.spec.num_utterances);
  f.Get("seed", c.spec.seed);
  f.Get("min_words", c.spec.min_words);
  f.Get("max_words", c.spec.max_words);
  f.Get("noise_min", c.spec.noise_min);
  f.Get("noise_max", c.spec.noise_max);
  f.Get("num_speakers", c.spec.num_speakers);
  f.Get("id_prefix", c.spec.id_prefix);
  f.Get("labeled", c.labeled);
  f.Get("name", c.name);
  f.Finish();
  if (c.spec.num_utterances < 1) throw ConfigError(f.Sub("num_utterances"), "must be at least 1");
  if (c.name.empty() || c.name.find('/') != std::string::npos)
    throw ConfigError(f.Sub("name"), "must be a plain file stem");
}

void ReadPretrain(Fields f, PretrainConfig &p) {
  f.Get("start_prob", p.start_prob);
  f.Get("span_length", p.span_length);
  f.Get("num_negatives", p.num_negatives);
  f.Get("temperature", p.temperature);
  if (f.Has("schedule")) ReadSchedule(f.Object("schedule"), p.schedule);
  f.Get("steps", p.steps);
  f.Get("batch_size", p.batch_size);
  f.Get("use_ema", p.use_ema);
  f.Get("ema_decay", p.ema_decay);
  f.Get("stop_gradient_targets", p.stop_gradient_targets);
  f.Get("clip_norm", p.clip_norm);
  f.Finish();
}

void ReadFinetune(Fields f, FinetuneSection &s) {
  FinetuneConfig &c = s.cfg;
  if (f.Has("encoder_schedule")) ReadSchedule(f.Object("encoder_schedule"), c.encoder_schedule);
  if (f.Has("decoder_schedule")) ReadSchedule(f.Object("decoder_schedule"), c.decoder_schedule);
  f.Get("steps", c.steps);
  f.Get("batch_size", c.batch_size);
  if (f.Has("augment")) ReadAugment(f.Object("augment"), c.augment);
  f.Get("use_augment", c.use_augment);
  f.Get("use_ema", c.use_ema);
  f.Get("ema_decay", c.ema_decay);
  f.Get("eval_every", c.eval_every);
  f.Get("clip_norm", c.clip_norm);
  if (f.Has("init")) {
    std::string m;
    f.Get("init", m);
    Validated(f.Sub("init"), [&] { c.init = InitModeFromString(m); });
  }
  f.Get("labeled_fractions", s.labeled_fractions);
  for (size_t i = 0; i < s.labeled_fractions.size(); ++i)
    if (!(s.labeled_fractions[i] > 0.0 && s.labeled_fractions[i] <= 1.0))
      throw ConfigError(f.Sub("labeled_fractions") + "[" + std::to_string(i) + "]", "must lie in (0, 1]");
  std::vector<std::string> inits;
  f.Get("sweep_inits", inits);
  for (size_t i = 0; i < inits.size(); ++i)
    Validated(f.Sub("sweep_inits") + "[" + std::to_string(i) + "]",
              [&] { s.sweep_inits.push_back(InitModeFromString(inits[i])); });
  f.Finish();
  if (!s.sweep_inits.empty() && s.labeled_fractions.empty())
    throw ConfigError(f.Sub("sweep_inits"), "needs labeled_fractions");
}

void ReadNst(Fields f, NstSection &s, const std::string &base_dir) {
  f.Get("keep_fraction", s.cfg.keep_fraction);
  f.Get("nst_ratio", s.cfg.nst_ratio);
  f.Get("generations", s.cfg.generations);
  f.Get("promote_student", s.cfg.promote_student);
  f.Get("student_checkpoint", s.student_checkpoint);
  s.student_checkpoint = ResolvePath(base_dir, s.student_checkpoint);
  f.Finish();
}

void ReadProbe(Fields f, ProbeSection &s) {
  f.Get("tasks", s.tasks);
  if (f.Has("options")) {
    Fields o = f.Object("options");
    o.Get("l2", s.options.l2);
    o.Get("iterations", s.options.iterations);
    o.Get("learning_rate", s.options.learning_rate);
    o.Get("lda_ridge", s.options.lda_ridge);
    o.Finish();
  }
  if (f.Has("mlp")) {
    Fields m = f.Object("mlp");
    MlpSection mlp;
    mlp.tag = m.Require<std::string>("tag");
    m.Get("layer", mlp.layer);
    m.Get("hidden", mlp.head.hidden);
    m.Get("epochs", mlp.head.epochs);
    m.Get("learning_rate", mlp.head.learning_rate);
    m.Finish();
    s.mlp = mlp;
  }
  f.Finish();
  if (s.tasks.empty() && !s.mlp) throw ConfigError(f.Sub("tasks"), "probe needs at least one task or an mlp section");
}

void ReadEvaluate(Fields f, EvaluateSection &s) {
  f.Get("beam_width", s.beam_width);
  f.Get("tune_fusion", s.tune_fusion);
  f.Get("trials", s.trials);
  f.Get("lm_order", s.lm_order);
  f.Get("lm_add_k", s.lm_add_k);
  f.Finish();
  if (s.beam_width < 1) throw ConfigError(f.Sub("beam_width"), "must be at least 1");
  if (s.trials < 1) throw ConfigError(f.Sub("trials"), "must be at least 1");
}

void RequirePath(const std::string &path, const std::string &field, const std::string &command) {
  if (path.empty()) throw ConfigError(field, "required by command " + command);
}

}  // namespace

ConfigError::ConfigError(const std::string &path, const std::string &what)
    : std::invalid_argument(path + ": " + what), path_(path) {}

std::string Sha256Hex(const std::string &data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char *hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

ExperimentConfig ParseConfig(const std::string &text, const std::string &base_dir, const ConfigOverrides &ov) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  if (ov.seed) j["seed"] = *ov.seed;
  if (ov.preset) j["preset"] = *ov.preset;

  ExperimentConfig c;
  c.canonical_json = j.dump();
  c.digest = Sha256Hex(c.canonical_json);
  Fields f(j, "");
  c.command = f.Require<std::string>("command");
  if (std::find_if(std::begin(kCommands), std::end(kCommands), [&](const char *k) { return c.command == k; }) ==
      std::end(kCommands))
    throw ConfigError("command", "unknown command '" + c.command + "'");
  c.seed = f.Require<uint64_t>("seed");
  f.Get("run_id", c.run_id);
  if (c.run_id.empty()) c.run_id = c.command + "-" + c.digest.substr(0, 12);
  f.Get("preset", c.preset);
  Validated("preset", [&] { c.encoder = ConformerConfig::Preset(c.preset); });
  if (f.Has("encoder")) ReadEncoder(f.Object("encoder"), c.encoder);
  Validated("encoder", [&] { c.encoder.Validate(); });

  c.corpus.spec.seed = c.seed;
  if (f.Has("corpus")) ReadCorpus(f.Object("corpus"), c.corpus);
  if (f.Has("data")) {
    Fields d = f.Object("data");
    d.Get("train", c.data.train);
    d.Get("unlabeled", c.data.unlabeled);
    d.Get("dev", c.data.dev);
    d.Get("test", c.data.test);
    d.Finish();
    for (std::string *p : {&c.data.train, &c.data.unlabeled, &c.data.dev, &c.data.test}) *p = ResolvePath(base_dir, *p);
  }
  f.Get("checkpoint", c.checkpoint);
  c.checkpoint = ResolvePath(base_dir, c.checkpoint);

  c.pretrain.encoder = c.encoder;
  c.pretrain.seed = c.seed;
  if (f.Has("pretrain")) ReadPretrain(f.Object("pretrain"), c.pretrain);
  Validated("pretrain", [&] { c.pretrain.Validate(); });

  c.finetune.cfg.encoder = c.encoder;
  c.finetune.cfg.seed = c.seed;
  if (f.Has("finetune")) ReadFinetune(f.Object("finetune"), c.finetune);
  Validated("finetune", [&] { c.finetune.cfg.Validate(); });

  if (f.Has("nst")) ReadNst(f.Object("nst"), c.nst, base_dir);
  Validated("nst", [&] { c.nst.cfg.Validate(); });
  if (f.Has("probe")) ReadProbe(f.Object("probe"), c.probe);
  if (c.probe.mlp) c.probe.mlp->head.seed = DeriveSeed(c.seed, "mlp-head");
  if (f.Has("evaluate")) ReadEvaluate(f.Object("evaluate"), c.evaluate);
  f.Finish();

  // Per-command requirements.
  const std::string &cmd = c.command;
  if (cmd == "pretrain") RequirePath(c.data.train, "data.train", cmd);
  if (cmd == "finetune") {
    RequirePath(c.data.train, "data.train", cmd);
    RequirePath(c.data.dev, "data.dev", cmd);
    bool needs_ckpt = c.finetune.cfg.init != InitMode::kScratch;
    for (InitMode m : c.finetune.sweep_inits) needs_ckpt |= m != InitMode::kScratch;
    if (needs_ckpt) RequirePath(c.checkpoint, "checkpoint", cmd);
  }
  if (cmd == "nst") {
    RequirePath(c.checkpoint, "checkpoint", cmd);
    RequirePath(c.data.unlabeled, "data.unlabeled", cmd);
    RequirePath(c.data.dev, "data.dev", cmd);
    if (c.nst.cfg.nst_ratio < 1.0) RequirePath(c.data.train, "data.train", cmd);
  }
  if (cmd == "probe") {
    RequirePath(c.checkpoint, "checkpoint", cmd);
    RequirePath(c.data.train, "data.train", cmd);
    RequirePath(c.data.dev, "data.dev", cmd);
    RequirePath(c.data.test, "data.test", cmd);
    if (c.probe.tasks.empty() && !c.probe.mlp) throw ConfigError("probe", "required by command probe");
  }
  if (cmd == "evaluate") {
    RequirePath(c.checkpoint, "checkpoint", cmd);
    RequirePath(c.data.dev, "data.dev", cmd);
    if (c.evaluate.tune_fusion) RequirePath(c.data.train, "data.train", cmd);
  }
  return c;
}

ExperimentConfig LoadConfig(const std::string &path, const ConfigOverrides &overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), fs::absolute(path).parent_path().string(), overrides);
}

void CheckInputsExist(const ExperimentConfig &c) {
  auto check = [](const std::string &p, const char *field) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError(field, "file not found: " + p);
  };
  check(c.data.train, "data.train");
  check(c.data.unlabeled, "data.unlabeled");
  check(c.data.dev, "data.dev");
  check(c.data.test, "data.test");
  check(c.checkpoint, "checkpoint");
  check(c.nst.student_checkpoint, "nst.student_checkpoint");
}

}  // namespace sslab
