// include/sslab/audio/manifest.h

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

// Line-delimited JSON manifests.  Required keys: id, audio, duration_s.
// Optional: transcript, hypothesis, loss_per_word, tags (string -> string).

#ifndef SSLAB_AUDIO_MANIFEST_H_
#define SSLAB_AUDIO_MANIFEST_H_

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sslab {

class ManifestError : public std::runtime_error {
 public:
  ManifestError(const std::string &path, int line, const std::string &what);
  int line() const { return line_; }

 private:
  int line_;
};

struct ManifestEntry {
  std::string id;
  std::string audio;
  std::optional<std::string> transcript;
  double duration_s = 0.0;
  std::optional<std::string> hypothesis;
  std::optional<double> loss_per_word;
  std::map<std::string, std::string> tags;

  bool labeled() const { return transcript.has_value(); }
  bool operator==(const ManifestEntry &) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  size_t size() const { return entries.size(); }
  bool operator==(const Manifest &) const = default;
};

Manifest ReadManifest(const std::string &path);
void WriteManifest(const Manifest &m, const std::string &path);

// Parses one line; line_no is only used for messages.
ManifestEntry ParseManifestLine(const std::string &text, const std::string &path, int line_no);
std::string FormatManifestLine(const ManifestEntry &e);

// Relative audio references are taken relative to the manifest's directory.
std::string ResolveAudioPath(const std::string &manifest_path, const std::string &audio);

}  // namespace sslab

#endif  // SSLAB_AUDIO_MANIFEST_H_
