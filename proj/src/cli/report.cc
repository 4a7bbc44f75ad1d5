// src/cli/report.cc

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

#include "sslab/cli/report.h"

#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace sslab {

namespace {

constexpr const char *kSummaryPrefix = "summary:";

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double ParseDouble(const std::string &s, int line) {
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw std::invalid_argument("plot table line " + std::to_string(line) + ": bad value '" + s + "'");
  return v;
}

}  // namespace

void MetricsReport::Add(const std::string &name, int64_t step, double value) {
  if (name.rfind(kSummaryPrefix, 0) == 0) throw std::invalid_argument("series name '" + name + "' is reserved");
  auto &s = series[name];
  if (!s.empty() && step <= s.back().first)
    throw std::invalid_argument("series '" + name + "': step " + std::to_string(step) + " does not increase");
  s.emplace_back(step, value);
}

void MetricsReport::AddSeries(const std::string &name, const Series &s) {
  for (const auto &[step, v] : s) Add(name, step, v);
}

std::string ReportToJson(const MetricsReport &r) {
  nlohmann::json j;
  j["run_id"] = r.run_id;
  j["config_digest"] = r.config_digest;
  j["complete"] = r.complete;
  if (!r.error.empty()) j["error"] = r.error;
  j["series"] = nlohmann::json::object();
  for (const auto &[name, s] : r.series) {
    auto &a = j["series"][name] = nlohmann::json::array();
    for (const auto &[step, v] : s) a.push_back({step, v});
  }
  j["summary"] = r.summary;
  return j.dump(2) + "\n";
}

MetricsReport ReportFromJson(const std::string &text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.run_id = j.at("run_id").get<std::string>();
  r.config_digest = j.at("config_digest").get<std::string>();
  r.complete = j.at("complete").get<bool>();
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  for (const auto &[name, a] : j.at("series").items())
    for (const auto &p : a) r.Add(name, p.at(0).get<int64_t>(), p.at(1).get<double>());
  for (const auto &[name, v] : j.at("summary").items()) r.summary[name] = v.get<double>();
  return r;
}

std::string PlotTable(const std::vector<MetricsReport> &reports) {
  std::set<std::string> ids;
  std::string out = "run\tseries\tstep\tvalue\n";
  for (const auto &r : reports) {
    if (r.run_id.empty() || r.run_id.find_first_of("\t\n") != std::string::npos)
      throw std::invalid_argument("run id '" + r.run_id + "' cannot be tabulated");
    if (!ids.insert(r.run_id).second) throw std::invalid_argument("conflicting run id '" + r.run_id + "'");
    for (const auto &[name, s] : r.series)
      for (const auto &[step, v] : s) out += r.run_id + "\t" + name + "\t" + std::to_string(step) + "\t" + Num(v) + "\n";
    for (const auto &[name, v] : r.summary) out += r.run_id + "\t" + kSummaryPrefix + name + "\t0\t" + Num(v) + "\n";
  }
  return out;
}

std::vector<MetricsReport> ReportsFromPlotTable(const std::string &table) {
  std::istringstream in(table);
  std::string line;
  std::vector<MetricsReport> out;
  std::map<std::string, size_t> index;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "run\tseries\tstep\tvalue") throw std::invalid_argument("plot table: bad header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, '\t')) cols.push_back(c);
    if (cols.size() != 4) throw std::invalid_argument("plot table line " + std::to_string(line_no) + ": expected 4 columns");
    auto [it, fresh] = index.emplace(cols[0], out.size());
    if (fresh) {
      out.emplace_back();
      out.back().run_id = cols[0];
    }
    MetricsReport &r = out[it->second];
    const double v = ParseDouble(cols[3], line_no);
    if (cols[1].rfind(kSummaryPrefix, 0) == 0)
      r.summary[cols[1].substr(std::string(kSummaryPrefix).size())] = v;
    else
      r.Add(cols[1], std::stoll(cols[2]), v);
  }
  return out;
}

}  // namespace sslab
