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

#include "vimpc/sampler.h"

#include <cmath>
#include <limits>

#include "vimpc/parallel.h"
#include "vimpc/random.h"

namespace vimpc {
namespace {

// Propagates rollouts [begin, end) (flat index k * P + i) through all T
// steps, batching the rollouts that drew the same ensemble member.
void RolloutChunk(const EnsemblePosterior& posterior,
                  const std::vector<ActionSequence>& actions,
                  const RolloutPlan& plan, const RewardFn& reward,
                  const SamplerOptions& options, int begin, int end,
                  TrajectoryBatch* batch) {
  const int p = plan.num_rollouts;
  const int ds = batch->state_dim;
  const int da = actions.front().action_dim();
  const int e_count = posterior.size();
  const int n = end - begin;

  std::vector<StreamRng> streams;
  streams.reserve(n);
  for (int r = begin; r < end; ++r) streams.emplace_back(plan.seed, r / p, r % p);

  std::vector<bool> alive(n, true);
  std::vector<int> member(n);
  std::vector<std::vector<int>> groups(e_count);
  Eigen::MatrixXd states, acts, mean, var;
  Eigen::VectorXd s(ds), a(da), next(ds);

  for (int t = 0; t < plan.horizon; ++t) {
    for (auto& g : groups) g.clear();
    for (int j = 0; j < n; ++j) {
      if (!alive[j]) continue;
      member[j] = e_count == 1 ? 0 : streams[j].UniformInt(e_count);
      groups[member[j]].push_back(j);
    }
    for (int e = 0; e < e_count; ++e) {
      const std::vector<int>& g = groups[e];
      if (g.empty()) continue;
      const int count = static_cast<int>(g.size());
      states.resize(ds, count);
      acts.resize(da, count);
      for (int c = 0; c < count; ++c) {
        const int r = begin + g[c];
        states.col(c) = batch->StateVector(r / p, r % p, t);
        acts.col(c) = actions[r / p].step(t);
      }
      posterior.particle(e).PredictBatch(states, acts, &mean, &var);
      for (int c = 0; c < count; ++c) {
        const int j = g[c];
        const int r = begin + j;
        const int k = r / p;
        const int i = r % p;
        for (int d = 0; d < ds; ++d) {
          next[d] = mean(d, c) + std::sqrt(var(d, c)) * streams[j].Normal();
        }
        double* out = batch->state(k, i, t + 1);
        for (int d = 0; d < ds; ++d) out[d] = next[d];
        s = states.col(c);
        a = acts.col(c);
        const double step_reward = next.allFinite()
                                       ? reward(s, a, next)
                                       : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(step_reward)) {
          alive[j] = false;
          batch->non_finite[r] = 1;
          batch->rewards(k, i) = options.non_finite_reward;
          for (int tt = t + 1; tt <= plan.horizon; ++tt) {
            double* rest = batch->state(k, i, tt);
            for (int d = 0; d < ds; ++d) {
              rest[d] = std::numeric_limits<double>::quiet_NaN();
            }
          }
          continue;
        }
        batch->rewards(k, i) += step_reward;
      }
    }
  }
}

}  // namespace

TrajectoryBatch Ts1Rollout(const EnsemblePosterior& posterior,
                           const Eigen::VectorXd& initial_state,
                           const std::vector<ActionSequence>& actions,
                           const RolloutPlan& plan, const RewardFn& reward,
                           const SamplerOptions& options) {
  if (posterior.size() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "posterior",
                "posterior has no particles");
  }
  if (plan.num_candidates < 1 || plan.num_rollouts < 1 || plan.horizon < 1 ||
      static_cast<int>(actions.size()) != plan.num_candidates) {
    throw Error(ErrorCode::kInvalidArgument, "plan",
                "need K, P, T >= 1 and one action sequence per candidate");
  }
  if (!initial_state.allFinite() ||
      initial_state.size() != posterior.state_dim()) {
    throw Error(ErrorCode::kInvalidArgument, "initial_state",
                "initial state must be finite with dimension d_s");
  }
  for (const ActionSequence& a : actions) {
    if (a.horizon() < plan.horizon || a.action_dim() != posterior.action_dim()) {
      throw Error(ErrorCode::kInvalidArgument, "actions",
                  "action sequence shape does not match plan");
    }
  }

  const int ds = posterior.state_dim();
  TrajectoryBatch batch(plan.num_candidates, plan.num_rollouts, plan.horizon,
                        ds);
  for (int k = 0; k < plan.num_candidates; ++k) {
    for (int i = 0; i < plan.num_rollouts; ++i) {
      double* s0 = batch.state(k, i, 0);
      for (int d = 0; d < ds; ++d) s0[d] = initial_state[d];
    }
  }
  const int total = plan.num_candidates * plan.num_rollouts;
  ParallelChunks(total, options.threads, [&](int begin, int end) {
    RolloutChunk(posterior, actions, plan, reward, options, begin, end,
                 &batch);
  });
  return batch;
}

}  // namespace vimpc
