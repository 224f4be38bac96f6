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

// Optimality-likelihood transforms f(r(tau)) and the estimators that turn a
// batch of rollout rewards into per-candidate likelihood weights.
//
// Every transform takes the K per-candidate rewards of one planner iteration
// and returns unnormalized, nonnegative weights. Min/max statistics are
// always taken over the current batch.

#ifndef VIMPC_OPTIMALITY_H_
#define VIMPC_OPTIMALITY_H_

#include <functional>

#include <Eigen/Core>

#include "vimpc/core_types.h"

namespace vimpc {

using RewardVector = Eigen::VectorXd;

// Which side of Jensen's inequality the planner estimates. kWPrime applies f
// to the rollout-mean reward; kW averages f over rollouts.
enum class Estimator { kWPrime, kW };

// Per-candidate mean over the P rollouts. Throws kEmptyBatch if K or P is 0.
RewardVector EstimateWPrime(const TrajectoryBatch& batch);

// Number of elites, max(1, floor(e * K)).
int EliteCount(int num_candidates, double elite_fraction);

// Candidate indices sorted by descending reward, ties by ascending index.
std::vector<int> RankDescending(const RewardVector& r);

// Indicator on the EliteCount(K, e) best candidates.
Eigen::VectorXd TransformCem(const RewardVector& r, double elite_fraction);

// exp{(1/lambda) * (r - r_min) / (r_max - r_min)}; all ones when the range
// is degenerate. Output lies in [1, e^{1/lambda}].
Eigen::VectorXd TransformMppi(const RewardVector& r, double lambda);

// (r - r_min) / (r_max - r_min); uniform 1/K when the range is degenerate.
Eigen::VectorXd TransformPropCem(const RewardVector& r);

// Rank weights log(1 + N_e + 1 - i) for the i-th best elite (i = 1 best),
// zero outside the elite set.
Eigen::VectorXd TransformCmaEs(const RewardVector& r, double elite_fraction);

// Dispatches on config.kind.
Eigen::VectorXd ApplyTransform(const OptimalityConfig& config,
                               const RewardVector& r);

// Pointwise estimators for an arbitrary scalar likelihood f, used to study
// the two estimators directly. `rewards` is K x P.
Eigen::VectorXd MeanThenTransform(const Eigen::MatrixXd& rewards,
                                  const std::function<double(double)>& f);
Eigen::VectorXd TransformThenMean(const Eigen::MatrixXd& rewards,
                                  const std::function<double(double)>& f);

// Transformed weights for a batch under the chosen estimator. For kW the
// transform is applied jointly to all K*P rollout rewards (so batch
// statistics such as r_min, r_max and the elite threshold are shared) and
// the result averaged per candidate.
Eigen::VectorXd OptimalityWeights(const TrajectoryBatch& batch,
                                  const OptimalityConfig& config,
                                  Estimator estimator = Estimator::kWPrime);

}  // namespace vimpc

#endif  // VIMPC_OPTIMALITY_H_
