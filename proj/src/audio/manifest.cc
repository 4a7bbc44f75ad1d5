// src/audio/manifest.cc

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

#include "sslab/audio/manifest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "sslab/numerics/checkpoint.h"

namespace sslab {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {"id",         "audio",         "transcript", "duration_s",
                                          "hypothesis", "loss_per_word", "tags"};

}  // namespace

ManifestError::ManifestError(const std::string &path, int line, const std::string &what)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

ManifestEntry ParseManifestLine(const std::string &text, const std::string &path, int line_no) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ManifestError(path, line_no, std::string("malformed line: ") + e.what());
  }
  if (!j.is_object()) throw ManifestError(path, line_no, "malformed line: expected a JSON object");
  for (const auto &[k, v] : j.items())
    if (!kKnownKeys.count(k)) throw ManifestError(path, line_no, "unknown field '" + k + "'");
  auto need_string = [&](const char *key) -> std::string {
    if (!j.contains(key)) throw ManifestError(path, line_no, std::string("missing field '") + key + "'");
    if (!j[key].is_string()) throw ManifestError(path, line_no, std::string("field '") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  ManifestEntry e;
  e.id = need_string("id");
  if (e.id.empty()) throw ManifestError(path, line_no, "empty id");
  e.audio = need_string("audio");
  if (!j.contains("duration_s")) throw ManifestError(path, line_no, "missing field 'duration_s'");
  if (!j["duration_s"].is_number()) throw ManifestError(path, line_no, "field 'duration_s' must be a number");
  e.duration_s = j["duration_s"].get<double>();
  if (!(e.duration_s > 0.0) || !std::isfinite(e.duration_s))
    throw ManifestError(path, line_no, "duration_s must be positive, got " + j["duration_s"].dump());
  if (j.contains("transcript")) {
    e.transcript = need_string("transcript");
    if (e.transcript->empty()) throw ManifestError(path, line_no, "labeled entry has an empty transcript");
  }
  if (j.contains("hypothesis")) e.hypothesis = need_string("hypothesis");
  if (j.contains("loss_per_word")) {
    if (!j["loss_per_word"].is_number()) throw ManifestError(path, line_no, "field 'loss_per_word' must be a number");
    e.loss_per_word = j["loss_per_word"].get<double>();
  }
  if (j.contains("tags")) {
    if (!j["tags"].is_object()) throw ManifestError(path, line_no, "field 'tags' must be an object");
    for (const auto &[k, v] : j["tags"].items()) {
      if (!v.is_string()) throw ManifestError(path, line_no, "tag '" + k + "' must be a string");
      e.tags[k] = v.get<std::string>();
    }
  }
  return e;
}

std::string FormatManifestLine(const ManifestEntry &e) {
  json j = json::object();
  j["id"] = e.id;
  j["audio"] = e.audio;
  if (e.transcript) j["transcript"] = *e.transcript;
  j["duration_s"] = e.duration_s;
  if (e.hypothesis) j["hypothesis"] = *e.hypothesis;
  if (e.loss_per_word) j["loss_per_word"] = *e.loss_per_word;
  if (!e.tags.empty()) j["tags"] = e.tags;
  return j.dump();
}

Manifest ReadManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ManifestError(path, 0, "cannot open manifest");
  Manifest m;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ManifestEntry e = ParseManifestLine(line, path, line_no);
    if (!seen.insert(e.id).second) throw ManifestError(path, line_no, "duplicate id '" + e.id + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

void WriteManifest(const Manifest &m, const std::string &path) {
  std::set<std::string> seen;
  std::string out;
  for (size_t i = 0; i < m.entries.size(); ++i) {
    const auto &e = m.entries[i];
    if (!seen.insert(e.id).second)
      throw ManifestError(path, static_cast<int>(i + 1), "duplicate id '" + e.id + "'");
    if (!(e.duration_s > 0.0))
      throw ManifestError(path, static_cast<int>(i + 1), "duration_s must be positive");
    out += FormatManifestLine(e);
    out += '\n';
  }
  AtomicWriteFile(path, out);
}

std::string ResolveAudioPath(const std::string &manifest_path, const std::string &audio) {
  namespace fs = std::filesystem;
  const fs::path a(audio);
  if (a.is_absolute()) return audio;
  return (fs::path(manifest_path).parent_path() / a).string();
}

}  // namespace sslab
