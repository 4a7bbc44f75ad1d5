// include/sslab/cli/report.h

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

// Metrics reports and their long-format plot tables.

#ifndef SSLAB_CLI_REPORT_H_
#define SSLAB_CLI_REPORT_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace sslab {

using Series = std::vector<std::pair<int64_t, double>>;

struct MetricsReport {
  std::string run_id;
  std::string config_digest;
  bool complete = true;
  std::string error;
  std::map<std::string, Series> series;
  std::map<std::string, double> summary;

  // Steps must increase strictly within a series.
  void Add(const std::string &series_name, int64_t step, double value);
  void AddSeries(const std::string &series_name, const Series &s);

  bool operator==(const MetricsReport &) const = default;
};

std::string ReportToJson(const MetricsReport &r);
MetricsReport ReportFromJson(const std::string &text);

// Tab-separated rows "run series step value", values printed with %.17g.
// Summary scalars appear as series "summary:<name>" at step 0.  Duplicate
// run ids throw.
std::string PlotTable(const std::vector<MetricsReport> &reports);
// Inverse of PlotTable for run ids, series and summaries.
std::vector<MetricsReport> ReportsFromPlotTable(const std::string &table);

}  // namespace sslab

#endif  // SSLAB_CLI_REPORT_H_
