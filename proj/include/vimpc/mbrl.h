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

// Episodic model-based RL: seed the dataset with random actions, then per
// episode retrain the ensemble and run receding-horizon VI-MPC for H steps.

#ifndef VIMPC_MBRL_H_
#define VIMPC_MBRL_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vimpc/dynamics.h"
#include "vimpc/envs.h"
#include "vimpc/mlp.h"
#include "vimpc/planner.h"
#include "vimpc/random.h"

namespace vimpc {

struct MbrlConfig {
  std::string env = "pendulum";
  int episodes = 10;
  int episode_length = 100;  // H
  PlannerConfig planner;
  EnsembleConfig ensemble;
  std::uint64_t seed = 0;
  bool deterministic_execution = false;
  // When non-empty, a checkpoint is written here after every episode.
  std::string checkpoint_dir;
  // Continue from checkpoint_dir if it holds a checkpoint.
  bool resume = false;

  void Validate(const EnvSpec& env) const;
};

struct EpisodeRecord {
  int episode = 0;
  double total_reward = 0.0;
  int dataset_size = 0;  // after appending this episode
  double plan_ess_mean = 0.0;
  // Raw-space NLL of the ensemble that planned this episode, measured on
  // the transitions the episode produced.
  double validation_nll = 0.0;
  int failed_plans = 0;
};

struct MbrlResult {
  double seed_reward = 0.0;  // total reward of the random seed episode
  std::vector<EpisodeRecord> episodes;
  TransitionDataset dataset;
  MlpEnsemble ensemble;  // last trained ensemble
};

// One episode of H uniformly random in-bounds actions from the initial
// state. Appends exactly H transitions to `data`; returns the total reward.
double CollectRandomEpisode(const Environment& env, int horizon, Rng& rng,
                            TransitionDataset* data);

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;

// `on_episode`, when set, is called after every finished episode.
MbrlResult RunMbrl(const MbrlConfig& config, const Environment& env,
                   const EpisodeCallback& on_episode = nullptr);
MbrlResult RunMbrl(const MbrlConfig& config);

// Fraction of occupied cells in a regular grid over [lower, upper] with
// `bins` cells per dimension; points outside are clamped to edge cells.
double CoverRatio(const std::vector<Eigen::VectorXd>& points,
                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                  int bins);

// Exact round-trip CSV persistence for datasets.
void SaveDataset(const TransitionDataset& data, const std::string& path);
TransitionDataset LoadDataset(const std::string& path, int state_dim,
                              int action_dim);

}  // namespace vimpc

#endif  // VIMPC_MBRL_H_
