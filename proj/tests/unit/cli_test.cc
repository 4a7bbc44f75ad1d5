// tests/unit/cli_test.cc

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
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "sslab/cli/config.h"
#include "sslab/cli/report.h"
#include "sslab/cli/runner.h"

using namespace sslab;
namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ErrorOf(const std::string &text) {
  try {
    ParseConfig(text, "/base");
  } catch (const ConfigError &e) {
    return e.what();
  }
  return "";
}

// Scratch directory removed at scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

MetricsReport Run(const std::string &json, const fs::path &base, const fs::path &out) {
  std::ostringstream log;
  return RunCommand(ParseConfig(json, base.string()), out.string(), log);
}

}  // namespace

TEST_CASE("config: strict fields with dotted paths") {
  CHECK(ErrorOf(R"({"command":"pretrain","seed":1,"pretrain":{"stepz":3}})") == "pretrain.stepz: unknown field");
  CHECK(ErrorOf(R"({"command":"pretrain","seed":1,"typo":3})") == "typo: unknown field");
  CHECK(ErrorOf(R"({"command":"pretrain","seed":1,"pretrain":{"schedule":{"peak_lr":"x"}}})") ==
        "pretrain.schedule.peak_lr: expected a number");
  CHECK(ErrorOf(R"({"command":"pretrain"})") == "seed: missing required field");
  CHECK(ErrorOf(R"({"command":"pretrain","seed":-4})") == "seed: expected a non-negative integer");
  CHECK(ErrorOf(R"({"command":"train","seed":1})") == "command: unknown command 'train'");
  CHECK(ErrorOf(R"({"command":"pretrain","seed":1,"preset":"XL"})").rfind("preset: ", 0) == 0);
  CHECK(ErrorOf(R"({"command":"pretrain","seed":1,"encoder":{"model_dim":30}})").rfind("encoder: ", 0) == 0);
  CHECK(ErrorOf(R"({"command":"nst","seed":1,"nst":{"keep_fraction":0.3}})").rfind("nst: ", 0) == 0);
  CHECK(ErrorOf(R"({"command":"finetune","seed":1,"finetune":{"labeled_fractions":[0.1,1.5]}})") ==
        "finetune.labeled_fractions[1]: must lie in (0, 1]");
  CHECK(ErrorOf(R"({"command":"finetune","seed":1,"data":{"train":"a","dev":"b"},"finetune":{"init":"full"}})") ==
        "checkpoint: required by command finetune");
  CHECK(ErrorOf("{not json").rfind("<root>: malformed JSON", 0) == 0);
}

TEST_CASE("config: defaults, overrides, paths and digest") {
  const std::string text = R"({"command":"pretrain","seed":7,"data":{"train":"corpus/train.jsonl"},
                               "encoder":{"num_layers":2}})";
  const auto a = ParseConfig(text, "/base");
  CHECK(a.seed == 7);
  CHECK(a.pretrain.seed == 7);
  CHECK(a.encoder.num_layers == 2);
  CHECK(a.encoder.model_dim == ConformerConfig::Preset("XS").model_dim);
  CHECK(a.data.train == "/base/corpus/train.jsonl");
  CHECK(a.digest == Sha256Hex(a.canonical_json));
  CHECK(a.run_id == "pretrain-" + a.digest.substr(0, 12));
  CHECK(ParseConfig(text, "/base").digest == a.digest);
  const auto b = ParseConfig(text, "/base", {uint64_t{9}, std::string("S")});
  CHECK(b.seed == 9);
  CHECK(b.pretrain.seed == 9);
  CHECK(b.preset == "S");
  CHECK(b.encoder.model_dim == ConformerConfig::Preset("S").model_dim);
  CHECK(b.digest != a.digest);
  // Known SHA-256 vector.
  CHECK(Sha256Hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("report: steps must increase; json round trip") {
  MetricsReport r;
  r.run_id = "x";
  r.config_digest = "d";
  r.Add("loss", 1, 0.5);
  r.Add("loss", 3, 0.1 + 0.2);
  CHECK_THROWS_AS(r.Add("loss", 3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(r.Add("summary:x", 1, 0.0), std::invalid_argument);
  r.summary["wer"] = 1.0 / 3.0;
  CHECK(ReportFromJson(ReportToJson(r)) == r);
}

TEST_CASE("plot data: row counts, merging, lossless round trip, conflicts") {
  MetricsReport a;
  a.run_id = "a";
  for (int s = 1; s <= 5; ++s) a.Add("loss", s, 1.0 / s);
  const std::string one = PlotTable({a});
  CHECK(std::count(one.begin(), one.end(), '\n') == 1 + 5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  MetricsReport b;
  b.run_id = "b";
  for (int s = -1; s <= 40; ++s) b.Add("acc", s, u(rng) * std::pow(10.0, s % 7 - 3));
  b.Add("loss", 2, 1e-300);
  b.summary["final"] = 0.1;
  const std::string two = PlotTable({a, b});
  CHECK(two.find("\nb\tacc\t") != std::string::npos);
  const auto back = ReportsFromPlotTable(two);
  REQUIRE(back.size() == 2);
  CHECK(back[0].series == a.series);
  CHECK(back[1].series == b.series);
  CHECK(back[1].summary == b.summary);
  CHECK_THROWS_AS(PlotTable({a, a}), std::invalid_argument);
}

TEST_CASE("cli: corpus generation is byte-reproducible") {
  TempDir t("sslab_cli_corpus");
  const std::string cfg = R"({"command":"gen-corpus","seed":5,"corpus":{"num_utterances":200,"name":"m"}})";
  Run(cfg, t.path, t.path / "a");
  Run(cfg, t.path, t.path / "b");
  CHECK(Slurp(t.path / "a/m.jsonl") == Slurp(t.path / "b/m.jsonl"));
  CHECK(Slurp(t.path / "a/metrics.json") == Slurp(t.path / "b/metrics.json"));
  CHECK(Slurp(t.path / "a/audio/utt000199.wav") == Slurp(t.path / "b/audio/utt000199.wav"));
  CHECK(ReadManifest((t.path / "a/m.jsonl").string()).size() == 200);
}

TEST_CASE("cli: a missing checkpoint fails validation before any output") {
  TempDir t("sslab_cli_missing");
  Run(R"({"command":"gen-corpus","seed":1,"corpus":{"num_utterances":4,"name":"train"}})", t.path, t.path / "c");
  const std::string cfg = R"({"command":"finetune","seed":1,"checkpoint":"nope.ckpt",
      "data":{"train":"c/train.jsonl","dev":"c/train.jsonl"},"finetune":{"init":"encoder-pretrained"}})";
  CHECK_THROWS_WITH_AS(Run(cfg, t.path, t.path / "ft"), doctest::Contains("checkpoint: file not found"), ConfigError);
  CHECK_FALSE(fs::exists(t.path / "ft"));
}

TEST_CASE("cli: mid-run failure leaves an incomplete report") {
  TempDir t("sslab_cli_fail");
  Run(R"({"command":"gen-corpus","seed":1,"corpus":{"num_utterances":4,"name":"u","labeled":false}})", t.path,
      t.path / "c");
  const std::string cfg = R"({"command":"finetune","seed":1,"data":{"train":"c/u.jsonl","dev":"c/u.jsonl"}})";
  CHECK_THROWS(Run(cfg, t.path, t.path / "ft"));
  const MetricsReport r = ReportFromJson(Slurp(t.path / "ft/metrics.json"));
  CHECK_FALSE(r.complete);
  CHECK(r.error.find("no transcript") != std::string::npos);
}

TEST_CASE("cli: label-efficiency sweep writes one report per cell") {
  TempDir t("sslab_cli_sweep");
  Run(R"({"command":"gen-corpus","seed":1,"corpus":{"num_utterances":10,"name":"train","max_words":1}})", t.path,
      t.path / "c");
  Run(R"({"command":"gen-corpus","seed":2,"corpus":{"num_utterances":3,"name":"dev","max_words":1,"id_prefix":"d"}})",
      t.path, t.path / "c");
  const std::string enc = R"("encoder":{"num_layers":1,"model_dim":16,"subsample_channels":4})";
  Run(R"({"command":"pretrain","seed":1,)" + enc +
          R"(,"data":{"train":"c/train.jsonl"},"pretrain":{"steps":2,"batch_size":2}})",
      t.path, t.path / "pre");
  const std::string sweep = R"({"command":"finetune","seed":1,)" + enc + R"(,"checkpoint":"pre/encoder.ckpt",
      "data":{"train":"c/train.jsonl","dev":"c/dev.jsonl"},
      "finetune":{"steps":2,"batch_size":2,"labeled_fractions":[0.1,0.3,1.0],
                  "sweep_inits":["scratch","encoder-pretrained"]}})";
  const MetricsReport r = Run(sweep, t.path, t.path / "sweep");
  int cells = 0;
  for (const auto &e : fs::directory_iterator(t.path / "sweep/cells")) {
    ++cells;
    const MetricsReport c = ReportFromJson(Slurp(e.path() / "metrics.json"));
    CHECK(c.run_id.rfind(r.run_id + "/", 0) == 0);
    CHECK(c.summary.count("dev_wer") == 1);
    CHECK(c.series.at("train/loss").size() == 2);
  }
  CHECK(cells == 6);
  CHECK(r.summary.count("dev_wer/labeled0.1-scratch") == 1);
  CHECK(r.summary.count("dev_wer/labeled1-encoder-pretrained") == 1);
  CHECK(ReportsFromPlotTable(Slurp(t.path / "sweep/plot.tsv")).size() == 7);
  const MetricsReport again = Run(sweep, t.path, t.path / "sweep2");
  CHECK(Slurp(t.path / "sweep/plot.tsv") == Slurp(t.path / "sweep2/plot.tsv"));
  CHECK(again == r);
}
