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

#include "vimpc/planner.h"

#include <cmath>

namespace vimpc {

void PlannerConfig::Validate(const EnvSpec& env) const {
  ValidateConfig(optimality, env);
  auto positive = [](int v, const char* field) {
    if (v < 1) throw Error(ErrorCode::kInvalidConfig, field, "must be >= 1");
  };
  positive(num_components, "M");
  positive(num_candidates, "K");
  positive(num_rollouts, "P");
  positive(iterations, "U");
  positive(horizon, "T");
  positive(threads, "threads");
  if (!(initial_variance > 0.0) || !std::isfinite(initial_variance)) {
    throw Error(ErrorCode::kInvalidConfig, "initial_variance", "must be > 0");
  }
  if (!(variance_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "variance_floor", "must be > 0");
  }
}

PlanResult Plan(const Eigen::VectorXd& initial_state, const GmmParams& initial,
                const EnsemblePosterior& posterior, const RewardFn& reward,
                const ActionBounds& bounds, const PlannerConfig& config,
                Rng& rng) {
  initial.Validate();
  if (initial.num_components() != config.num_components ||
      initial.horizon != config.horizon ||
      initial.action_dim != posterior.action_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "phi",
                "initial mixture does not match M, T or d_a");
  }
  const double kappa = config.optimality.max_ent ? config.optimality.kappa : 0.0;
  const SamplerOptions sampler{config.threads, config.non_finite_reward};

  PlanResult result;
  result.params = initial;
  result.trace.push_back(initial);
  bool any_finite = false;

  for (int j = 0; j < config.iterations; ++j) {
    const GmmParams& phi = result.params;
    std::vector<ActionSequence> actions =
        SampleGmm(phi, config.num_candidates, bounds, rng);
    const RolloutPlan plan{config.num_candidates, config.num_rollouts,
                           config.horizon, rng.NextSeed()};
    const TrajectoryBatch batch =
        Ts1Rollout(posterior, initial_state, actions, plan, reward, sampler);

    IterationDiagnostics diag;
    diag.iteration = j + 1;
    for (std::uint8_t flag : batch.non_finite) diag.non_finite_rollouts += flag;
    if (diag.non_finite_rollouts <
        config.num_candidates * config.num_rollouts) {
      any_finite = true;
    }

    const RewardVector mean_reward = EstimateWPrime(batch);
    diag.best_mean_reward = mean_reward.maxCoeff();
    diag.mean_reward = mean_reward.mean();

    const Eigen::VectorXd w_prime =
        OptimalityWeights(batch, config.optimality, config.estimator);
    const Eigen::VectorXd log_q = kappa > 0.0
                                      ? GmmLogDensities(phi, actions)
                                      : Eigen::VectorXd::Zero(w_prime.size());
    const ParticleWeights weights = UpdateParticleWeights(w_prime, log_q, kappa);
    diag.effective_sample_size = weights.EffectiveSampleSize();

    GmmFit fit = FitGmmWeighted({std::move(actions), weights}, phi,
                                config.variance_floor);
    diag.mixture = fit.params.mixture;
    diag.degenerate = fit.degenerate;
    result.params = std::move(fit.params);
    result.trace.push_back(result.params);
    result.diagnostics.push_back(std::move(diag));
  }
  if (!any_finite) {
    throw Error(ErrorCode::kPlanFailed, "rollouts",
                "every rollout in every iteration was non-finite");
  }
  return result;
}

GmmParams InitGmm(int num_components, int horizon, int action_dim,
                  double initial_variance, Rng& rng) {
  GmmParams phi;
  phi.horizon = horizon;
  phi.action_dim = action_dim;
  const int d = horizon * action_dim;
  phi.mixture = Eigen::VectorXd::Constant(num_components, 1.0 / num_components);
  phi.means.resize(num_components, d);
  const double stddev = std::sqrt(initial_variance);
  for (int m = 0; m < num_components; ++m) {
    for (int i = 0; i < d; ++i) phi.means(m, i) = stddev * rng.Normal();
  }
  phi.variances = Eigen::MatrixXd::Constant(num_components, d, initial_variance);
  return phi;
}

GmmParams WarmStartShift(const GmmParams& phi, double initial_variance,
                         const ActionBounds& bounds) {
  GmmParams next = phi;
  const int m_count = phi.num_components();
  const int da = phi.action_dim;
  const int d = phi.dim();
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(da);
  if (bounds.dim() == da && !bounds.Contains(tail)) tail = bounds.Midpoint();
  for (int m = 0; m < m_count; ++m) {
    next.means.row(m).head(d - da) = phi.means.row(m).tail(d - da);
    next.means.row(m).tail(da) = tail.transpose();
  }
  next.variances.setConstant(initial_variance);
  next.mixture.setConstant(1.0 / m_count);
  return next;
}

ActionSequence SelectExecutedSequence(const GmmParams& phi,
                                      const ActionBounds& bounds, Rng& rng,
                                      bool deterministic) {
  if (deterministic) {
    ActionSequence mean = phi.Mean(phi.MostLikelyComponent());
    bounds.ClipInPlace(&mean);
    return mean;
  }
  return SampleGmm(phi, 1, bounds, rng).front();
}

}  // namespace vimpc
