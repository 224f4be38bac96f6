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

// The VI-MPC optimization loop. Each iteration samples K action sequences
// from q(a; phi), rolls each out P times under the dynamics posterior,
// turns the rollout rewards into particle weights and refits phi with one
// weighted EM step. (CEM, M = 1, kappa = 0) is the classic PETS planner.

#ifndef VIMPC_PLANNER_H_
#define VIMPC_PLANNER_H_

#include <vector>

#include <Eigen/Core>

#include "vimpc/core_types.h"
#include "vimpc/dynamics.h"
#include "vimpc/optimality.h"
#include "vimpc/posterior.h"
#include "vimpc/random.h"
#include "vimpc/sampler.h"

namespace vimpc {

struct PlannerConfig {
  OptimalityConfig optimality;
  int num_components = 1;    // M
  int num_candidates = 500;  // K
  int num_rollouts = 20;     // P
  int iterations = 5;        // U
  int horizon = 30;          // T
  double initial_variance = 1.0;  // Sigma_init, per coordinate
  double variance_floor = kDefaultVarianceFloor;
  Estimator estimator = Estimator::kWPrime;
  int threads = 1;
  double non_finite_reward = -1e6;

  // Throws kInvalidConfig naming the offending field.
  void Validate(const EnvSpec& env) const;
};

struct IterationDiagnostics {
  int iteration = 0;
  double best_mean_reward = 0.0;
  double mean_reward = 0.0;
  double effective_sample_size = 0.0;
  int non_finite_rollouts = 0;
  Eigen::VectorXd mixture;  // pi after the update
  std::vector<bool> degenerate;
};

struct PlanResult {
  GmmParams params;
  std::vector<IterationDiagnostics> diagnostics;
  // phi^(1) .. phi^(U+1).
  std::vector<GmmParams> trace;
};

// Runs config.iterations updates from `initial`. Per iteration the planner
// draws K samples with SampleGmm and then one NextSeed() for the rollout
// streams. Throws kPlanFailed only when every rollout of every iteration was
// non-finite.
PlanResult Plan(const Eigen::VectorXd& initial_state, const GmmParams& initial,
                const EnsemblePosterior& posterior, const RewardFn& reward,
                const ActionBounds& bounds, const PlannerConfig& config,
                Rng& rng);

// Means ~ N(0, initial_variance) independently per coordinate, variances
// initial_variance, uniform mixture.
GmmParams InitGmm(int num_components, int horizon, int action_dim,
                  double initial_variance, Rng& rng);

// Shifts every mean one step left and appends the zero action (the bounds'
// midpoint when zero is out of bounds), then resets variances to
// initial_variance and the mixture to uniform.
GmmParams WarmStartShift(const GmmParams& phi, double initial_variance,
                         const ActionBounds& bounds);

// Action sequence to execute: a draw from q(a; phi), or with
// `deterministic` the mean of the highest-weight component. Clipped.
ActionSequence SelectExecutedSequence(const GmmParams& phi,
                                      const ActionBounds& bounds, Rng& rng,
                                      bool deterministic);

}  // namespace vimpc

#endif  // VIMPC_PLANNER_H_
