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

#include "vimpc/optimality.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace vimpc {

RewardVector EstimateWPrime(const TrajectoryBatch& batch) {
  if (batch.num_candidates <= 0 || batch.num_rollouts <= 0) {
    throw Error(ErrorCode::kEmptyBatch, "batch", "K and P must be positive");
  }
  return batch.rewards.rowwise().mean();
}

int EliteCount(int num_candidates, double elite_fraction) {
  // The epsilon absorbs representation error in products such as 0.7 * 10.
  const int n = static_cast<int>(
      std::floor(elite_fraction * num_candidates + 1e-9));
  return std::clamp(n, 1, std::max(1, num_candidates));
}

std::vector<int> RankDescending(const RewardVector& r) {
  std::vector<int> order(r.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&r](int a, int b) { return r[a] > r[b]; });
  return order;
}

Eigen::VectorXd TransformCem(const RewardVector& r, double elite_fraction) {
  const int k = static_cast<int>(r.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  if (k == 0) return w;
  const std::vector<int> order = RankDescending(r);
  const int elites = EliteCount(k, elite_fraction);
  for (int i = 0; i < elites; ++i) w[order[i]] = 1.0;
  return w;
}

Eigen::VectorXd TransformMppi(const RewardVector& r, double lambda) {
  const int k = static_cast<int>(r.size());
  if (k == 0) return Eigen::VectorXd();
  const double lo = r.minCoeff();
  const double hi = r.maxCoeff();
  if (!(hi > lo)) return Eigen::VectorXd::Ones(k);
  const double range = hi - lo;
  Eigen::VectorXd w(k);
  for (int i = 0; i < k; ++i) {
    w[i] = std::exp((r[i] - lo) / range / lambda);
  }
  return w;
}

Eigen::VectorXd TransformPropCem(const RewardVector& r) {
  const int k = static_cast<int>(r.size());
  if (k == 0) return Eigen::VectorXd();
  const double lo = r.minCoeff();
  const double hi = r.maxCoeff();
  if (!(hi > lo)) return Eigen::VectorXd::Constant(k, 1.0 / k);
  return (r.array() - lo) / (hi - lo);
}

Eigen::VectorXd TransformCmaEs(const RewardVector& r, double elite_fraction) {
  const int k = static_cast<int>(r.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  if (k == 0) return w;
  const std::vector<int> order = RankDescending(r);
  const int elites = EliteCount(k, elite_fraction);
  for (int i = 0; i < elites; ++i) {
    // order[i] is the (i+1)-th best, so its reverse rank is elites - i.
    w[order[i]] = std::log(1.0 + (elites - i));
  }
  return w;
}

Eigen::VectorXd ApplyTransform(const OptimalityConfig& config,
                               const RewardVector& r) {
  switch (config.kind) {
    case OptimalityKind::kCem:
      return TransformCem(r, config.elite_fraction);
    case OptimalityKind::kMppi:
      return TransformMppi(r, config.lambda);
    case OptimalityKind::kPropCem:
      return TransformPropCem(r);
    case OptimalityKind::kCmaEs:
      return TransformCmaEs(r, config.elite_fraction);
  }
  return TransformCem(r, config.elite_fraction);
}

Eigen::VectorXd MeanThenTransform(const Eigen::MatrixXd& rewards,
                                  const std::function<double(double)>& f) {
  const Eigen::VectorXd mean = rewards.rowwise().mean();
  return mean.unaryExpr(f);
}

Eigen::VectorXd TransformThenMean(const Eigen::MatrixXd& rewards,
                                  const std::function<double(double)>& f) {
  return rewards.unaryExpr(f).rowwise().mean();
}

Eigen::VectorXd OptimalityWeights(const TrajectoryBatch& batch,
                                  const OptimalityConfig& config,
                                  Estimator estimator) {
  if (estimator == Estimator::kWPrime) {
    return ApplyTransform(config, EstimateWPrime(batch));
  }
  if (batch.num_candidates <= 0 || batch.num_rollouts <= 0) {
    throw Error(ErrorCode::kEmptyBatch, "batch", "K and P must be positive");
  }
  const int k = batch.num_candidates;
  const int p = batch.num_rollouts;
  // Row-major flattening so rollout (k, i) sits at k * P + i.
  Eigen::VectorXd flat(k * p);
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < p; ++i) flat[c * p + i] = batch.rewards(c, i);
  }
  const Eigen::VectorXd per_rollout = ApplyTransform(config, flat);
  Eigen::VectorXd w(k);
  for (int c = 0; c < k; ++c) w[c] = per_rollout.segment(c * p, p).mean();
  return w;
}

}  // namespace vimpc
