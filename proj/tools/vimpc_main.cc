// Copyright 2026 The vimpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command line entry point:
//   vimpc plan|fit|mbrl|sweep --config PATH --out DIR [--seeds 0-4] [--threads N]
//   vimpc replay --manifest DIR/run_manifest.json --out DIR2 [--threads N]

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vimpc/core_types.h"
#include "vimpc/experiment.h"

int main(int argc, char** argv) {
  CLI::App app{"Variational-inference MPC experiments"};
  app.set_version_flag("--version", std::string(vimpc::kLibraryVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string manifest_path;
  std::string out_dir;
  std::string seeds_text;
  int threads = 1;

  struct Command {
    const char* name;
    const char* help;
    vimpc::ExperimentMode mode;
  };
  const std::vector<Command> commands = {
      {"plan", "single receding-horizon plan with the true dynamics",
       vimpc::ExperimentMode::kPlanOnce},
      {"fit", "fit the mixture to the multimodal objective",
       vimpc::ExperimentMode::kFitObjective},
      {"mbrl", "model-based RL with a learned ensemble",
       vimpc::ExperimentMode::kMbrl},
      {"sweep", "grid over one planner parameter",
       vimpc::ExperimentMode::kSweep},
  };
  std::vector<CLI::App*> subs;
  for (const Command& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seeds", seeds_text,
                    "seed list, e.g. 0,1,2 or 0-4 (default: from config)");
    sub->add_option("--threads", threads, "worker threads")
        ->check(CLI::PositiveNumber);
    subs.push_back(sub);
  }
  CLI::App* replay =
      app.add_subcommand("replay", "re-run the experiment in a run manifest");
  replay->add_option("--manifest", manifest_path, "run_manifest.json")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--out", out_dir, "output directory")->required();
  replay->add_option("--threads", threads, "worker threads")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    vimpc::ExperimentSpec spec;
    if (replay->parsed()) {
      spec = vimpc::SpecFromManifest(manifest_path, out_dir, threads);
    } else {
      vimpc::ExperimentMode mode = vimpc::ExperimentMode::kPlanOnce;
      for (std::size_t i = 0; i < subs.size(); ++i) {
        if (subs[i]->parsed()) mode = commands[i].mode;
      }
      std::vector<std::uint64_t> seeds;
      if (!seeds_text.empty()) seeds = vimpc::ParseSeedList(seeds_text);
      spec = vimpc::MakeExperimentSpec(mode, config_path, out_dir, seeds,
                                       threads);
    }
    const int status = vimpc::RunExperiment(spec, std::cerr);
    if (status != 0) std::cerr << "one or more seeds failed\n";
    return status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
