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

#ifndef VIMPC_SAMPLER_H_
#define VIMPC_SAMPLER_H_

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "vimpc/core_types.h"
#include "vimpc/dynamics.h"

namespace vimpc {

// Step reward r(s_t, a_t, s_{t+1}).
using RewardFn = std::function<double(const Eigen::VectorXd&,
                                      const Eigen::VectorXd&,
                                      const Eigen::VectorXd&)>;

struct RolloutPlan {
  int num_candidates = 0;  // K
  int num_rollouts = 1;    // P
  int horizon = 0;         // T
  std::uint64_t seed = 0;
};

struct SamplerOptions {
  int threads = 1;
  // Summed reward assigned to a rollout that produced a non-finite state.
  double non_finite_reward = -1e6;
};

// TS1 trajectory sampling. Rollout (k, i) owns the counter-based stream
// StreamRng(plan.seed, k, i); at every step it draws the ensemble member
// index (skipped for a single-member posterior) and then one Normal() per
// state coordinate for the predictive sample. Output is therefore independent of options.threads.
//
// A rollout that reaches a non-finite state stops there: its flag is set,
// its reward becomes options.non_finite_reward, and its remaining states are
// NaN.
TrajectoryBatch Ts1Rollout(const EnsemblePosterior& posterior,
                           const Eigen::VectorXd& initial_state,
                           const std::vector<ActionSequence>& actions,
                           const RolloutPlan& plan, const RewardFn& reward,
                           const SamplerOptions& options = {});

}  // namespace vimpc

#endif  // VIMPC_SAMPLER_H_
