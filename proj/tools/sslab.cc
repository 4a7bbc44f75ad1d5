// tools/sslab.cc

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

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sslab/cli/config.h"
#include "sslab/cli/runner.h"

int main(int argc, char **argv) {
  CLI::App app{"sslab: speech representation experiments on synthetic audio"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<uint64_t> seed_override;
  std::optional<std::string> preset;
  for (const char *cmd : sslab::kCommands) {
    CLI::App *sub = app.add_subcommand(cmd, std::string("run the ") + cmd + " command");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "output directory")->required();
    sub->add_option("--seed-override", seed_override, "replace the config's seed");
    sub->add_option("--preset", preset, "architecture preset (XS or S)");
  }
  std::vector<std::string> reports;
  std::string plot_out;
  CLI::App *plot = app.add_subcommand("plot-data", "merge metrics reports into one long-format table");
  plot->add_option("reports", reports, "metrics.json files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output table")->required();

  CLI11_PARSE(app, argc, argv);
  const CLI::App *chosen = app.get_subcommands().front();
  try {
    if (chosen == plot) {
      sslab::EmitPlotData(reports, plot_out);
      return 0;
    }
    const sslab::ExperimentConfig cfg = sslab::LoadConfig(config_path, {seed_override, preset});
    if (cfg.command != chosen->get_name())
      throw sslab::ConfigError("command", "config names '" + cfg.command + "' but '" + chosen->get_name() +
                                              "' was invoked");
    const sslab::MetricsReport r = sslab::RunCommand(cfg, out_dir, std::cerr);
    std::cerr << "[" << r.run_id << "] done, report in " << out_dir << "/metrics.json\n";
    return 0;
  } catch (const sslab::ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
