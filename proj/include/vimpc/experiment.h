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

// Config-driven experiment harness behind the `vimpc` command line tool.
// Configs are strict JSON: unknown keys and missing required fields are
// errors. See README.md for the schema and the CSV files each mode writes.

#ifndef VIMPC_EXPERIMENT_H_
#define VIMPC_EXPERIMENT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "vimpc/envs.h"
#include "vimpc/mbrl.h"
#include "vimpc/planner.h"

namespace vimpc {

enum class ExperimentMode { kPlanOnce, kFitObjective, kMbrl, kSweep };

std::string_view ExperimentModeName(ExperimentMode mode);
// Accepts plan_once/plan, fit_objective/fit, mbrl, sweep.
ExperimentMode ParseExperimentMode(std::string_view text);

// Task id plus the (optional) task definition overrides from the config.
struct EnvConfig {
  std::string kind = "point_mass";
  PointMassTask point_mass = PointMassTask::Default();
  MultimodalObjective multimodal = MultimodalObjective::Default();
  double multimodal_action_limit = 2.0;
  PendulumParams pendulum;

  std::unique_ptr<Environment> Make() const;
};

struct SweepConfig {
  ExperimentMode mode = ExperimentMode::kMbrl;
  // One of: kappa, M, K, P, U, T, lambda, elite_fraction, E.
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentConfig {
  EnvConfig env;
  PlannerConfig planner;
  // Episode settings and ensemble training; mbrl.planner mirrors `planner`.
  MbrlConfig mbrl;
  // Per-seed episode checkpoints under <out>/checkpoint_seed<s>/.
  bool checkpoint = false;
  std::optional<SweepConfig> sweep;
  std::vector<std::uint64_t> seeds = {0};
};

// "GMM(M=5)" -> 5, "Gaussian" -> 1. Throws kParseError otherwise.
int ParseDistribution(std::string_view text);
std::string DistributionName(int num_components);

// Parses and validates. Structural problems throw kParseError naming the
// field path (and the line, when it can be located); semantic problems
// throw kValidationError naming the field.
ExperimentConfig ParseConfigText(const std::string& text,
                                 const std::string& source = "<config>");
ExperimentConfig ParseConfigFile(const std::string& path);

// Fully resolved config in the same schema ParseConfigText accepts.
std::string ConfigToJson(const ExperimentConfig& config);

// Sets one sweepable parameter. Throws kParseError for unknown names.
void ApplySweepValue(const std::string& parameter, double value,
                     ExperimentConfig* config);

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::kPlanOnce;
  std::string config_path;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
  int threads = 1;
  ExperimentConfig config;

  // Throws kValidationError if seeds is empty or the output directory
  // cannot be created.
  void Validate() const;
};

// Loads `config_path` and fills `seeds` from the config unless overridden.
ExperimentSpec MakeExperimentSpec(ExperimentMode mode,
                                  const std::string& config_path,
                                  const std::string& output_dir,
                                  const std::vector<std::uint64_t>& seeds,
                                  int threads);

// Rebuilds the ExperimentSpec recorded in a run_manifest.json.
ExperimentSpec SpecFromManifest(const std::string& manifest_path,
                                const std::string& output_dir, int threads);

// "0,1,2" or "0-4" (inclusive), or a mix: "0-2,7".
std::vector<std::uint64_t> ParseSeedList(std::string_view text);

// 95% confidence half-width of the mean (Student t), 0 for n < 2.
double ConfidenceHalfWidth(const std::vector<double>& values);

// Runs every seed, writes CSVs and run_manifest.json into output_dir.
// Returns 0 on success and 1 if any seed failed; artifacts of the seeds
// that finished are kept.
int RunExperiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace vimpc

#endif  // VIMPC_EXPERIMENT_H_
