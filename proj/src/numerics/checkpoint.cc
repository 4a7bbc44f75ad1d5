// src/numerics/checkpoint.cc

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

#include "sslab/numerics/checkpoint.h"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sslab {

namespace {

constexpr char kMagic[8] = {'S', 'S', 'L', 'A', 'B', 'C', 'K', 'P'};

template <typename T>
void PutLe(std::string &out, T v) {
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string &buf, const std::string &path) : buf_(buf), path_(path) {}

  template <typename T>
  T Le() {
    Need(sizeof(T));
    T v = 0;
    for (size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  std::string Bytes(size_t n) {
    Need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool AtEnd() const { return pos_ == buf_.size(); }

 private:
  void Need(size_t n) {
    if (pos_ + n > buf_.size())
      throw std::runtime_error("checkpoint " + path_ + ": truncated at byte " + std::to_string(pos_));
  }
  const std::string &buf_;
  const std::string &path_;
  size_t pos_ = 0;
};

}  // namespace

void Checkpoint::PutParams(const std::string &section, const ParamStore &params) {
  for (const auto &[name, t] : params.entries()) arrays[section + "/" + name] = t;
}

ParamStore Checkpoint::GetParams(const std::string &section) const {
  ParamStore out;
  const std::string prefix = section + "/";
  for (const auto &[name, t] : arrays)
    if (name.compare(0, prefix.size(), prefix) == 0)
      out.Set(name.substr(prefix.size()), t.AsLeaf());
  return out;
}

void Checkpoint::PutAdam(const std::string &group, const std::vector<std::string> &names,
                         const OptimizerState &state) {
  for (size_t i = 0; i < names.size(); ++i) {
    const int64_t n = static_cast<int64_t>(state.first_moment[i].size());
    arrays["adam/" + group + "/m/" + names[i]] = Tensor::FromData({n}, state.first_moment[i]);
    arrays["adam/" + group + "/v/" + names[i]] = Tensor::FromData({n}, state.second_moment[i]);
  }
}

void Checkpoint::GetAdam(const std::string &group, const std::vector<std::string> &names,
                         OptimizerState &state) const {
  state.first_moment.clear();
  state.second_moment.clear();
  for (const auto &name : names) {
    auto m = arrays.find("adam/" + group + "/m/" + name);
    auto v = arrays.find("adam/" + group + "/v/" + name);
    if (m == arrays.end() || v == arrays.end())
      throw std::runtime_error("checkpoint lacks optimizer moments for " + name);
    state.first_moment.push_back(m->second.values());
    state.second_moment.push_back(v->second.values());
  }
}

void SaveCheckpoint(const Checkpoint &ckpt, const std::string &path) {
  std::string out(kMagic, sizeof(kMagic));
  PutLe<uint32_t>(out, kCheckpointVersion);
  PutLe<uint32_t>(out, ckpt.flags);
  PutLe<uint64_t>(out, ckpt.metadata.size());
  out += ckpt.metadata;
  PutLe<uint64_t>(out, ckpt.arrays.size());
  for (const auto &[name, t] : ckpt.arrays) {
    PutLe<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out += name;
    PutLe<uint32_t>(out, static_cast<uint32_t>(t.ndim()));
    for (int64_t d : t.shape()) PutLe<uint64_t>(out, static_cast<uint64_t>(d));
    for (double v : t.values()) PutLe<uint32_t>(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
  }
  AtomicWriteFile(path, out);
}

Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  Reader r(buf, path);
  if (r.Bytes(8) != std::string(kMagic, 8))
    throw std::runtime_error("checkpoint " + path + ": bad magic");
  const uint32_t version = r.Le<uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint " + path + ": unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.flags = r.Le<uint32_t>();
  ckpt.metadata = r.Bytes(r.Le<uint64_t>());
  const uint64_t count = r.Le<uint64_t>();
  for (uint64_t e = 0; e < count; ++e) {
    std::string name = r.Bytes(r.Le<uint32_t>());
    const uint32_t ndim = r.Le<uint32_t>();
    Shape shape;
    for (uint32_t d = 0; d < ndim; ++d) shape.push_back(static_cast<int64_t>(r.Le<uint64_t>()));
    std::vector<double> v(NumElements(shape));
    for (double &x : v) x = static_cast<double>(std::bit_cast<float>(r.Le<uint32_t>()));
    ckpt.arrays[name] = Tensor::FromData(std::move(shape), std::move(v));
  }
  if (!r.AtEnd()) throw std::runtime_error("checkpoint " + path + ": trailing bytes");
  return ckpt;
}

void AtomicWriteFile(const std::string &path, const std::string &contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace sslab
