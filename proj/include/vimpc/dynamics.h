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

#ifndef VIMPC_DYNAMICS_H_
#define VIMPC_DYNAMICS_H_

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vimpc/core_types.h"

namespace vimpc {

// A predictive model p(s' | s, a, theta) with diagonal Gaussian output.
// Batched calls take one sample per column.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;

  // mean, variance: d_s x N next-state moments for states (d_s x N) and
  // actions (d_a x N).
  virtual void PredictBatch(const Eigen::MatrixXd& states,
                            const Eigen::MatrixXd& actions,
                            Eigen::MatrixXd* mean,
                            Eigen::MatrixXd* variance) const = 0;

  // Next-state mean, i.e. deterministic-mode prediction.
  Eigen::VectorXd PredictMean(const Eigen::VectorXd& state,
                              const Eigen::VectorXd& action) const;

  // s' = mean + sqrt(variance) * N(0, I), one Normal() draw per coordinate.
  template <typename Generator>
  Eigen::VectorXd PredictNext(const Eigen::VectorXd& state,
                              const Eigen::VectorXd& action,
                              Generator& rng) const {
    Eigen::MatrixXd mean, var;
    PredictBatch(state, action, &mean, &var);
    Eigen::VectorXd next(mean.rows());
    for (int i = 0; i < next.size(); ++i) {
      next[i] = mean(i, 0) + std::sqrt(var(i, 0)) * rng.Normal();
    }
    return next;
  }
};

// Deterministic closed-form transition with zero predictive variance.
class DeterministicModel : public DynamicsModel {
 public:
  using StepFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&,
                                               const Eigen::VectorXd&)>;

  DeterministicModel(int state_dim, int action_dim, StepFn step);

  int state_dim() const override { return state_dim_; }
  int action_dim() const override { return action_dim_; }
  void PredictBatch(const Eigen::MatrixXd& states,
                    const Eigen::MatrixXd& actions, Eigen::MatrixXd* mean,
                    Eigen::MatrixXd* variance) const override;

 private:
  int state_dim_;
  int action_dim_;
  StepFn step_;
};

// p_D(theta) approximated by E equally weighted particles.
class EnsemblePosterior {
 public:
  EnsemblePosterior() = default;
  explicit EnsemblePosterior(
      std::vector<std::shared_ptr<const DynamicsModel>> particles);

  int size() const { return static_cast<int>(particles_.size()); }
  int state_dim() const { return particles_.front()->state_dim(); }
  int action_dim() const { return particles_.front()->action_dim(); }
  const DynamicsModel& particle(int e) const { return *particles_[e]; }

 private:
  std::vector<std::shared_ptr<const DynamicsModel>> particles_;
};

// A single-particle posterior around a known model.
EnsemblePosterior SingleModelPosterior(
    std::shared_ptr<const DynamicsModel> model);

// Fixed transition for the linear_test analytic model:
// s' = A s + B a with A = [[1, 0.1], [0, 0.95]], B = [[0], [0.1]].
Eigen::Matrix2d LinearTestA();
Eigen::Vector2d LinearTestB();

// kind in {point_mass, pendulum, linear_test}; defaults of the matching
// environment. Throws kUnknownKind otherwise.
std::shared_ptr<const DynamicsModel> MakeAnalyticModel(std::string_view kind);

// Per-dimension mean / std of network inputs (s, a) and targets (s' - s).
struct Normalization {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_std;
  Eigen::VectorXd target_mean;
  Eigen::VectorXd target_std;

  static Normalization Identity(int input_dim, int target_dim);

  // Columns are samples.
  Eigen::MatrixXd NormalizeInputs(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd DenormalizeInputs(const Eigen::MatrixXd& z) const;
  Eigen::MatrixXd NormalizeTargets(const Eigen::MatrixXd& y) const;
  Eigen::MatrixXd DenormalizeTargets(const Eigen::MatrixXd& z) const;
};

inline constexpr double kNormalizationStdFloor = 1e-8;

// D = {(s, a, s')}. Appends reject non-finite records.
class TransitionDataset {
 public:
  TransitionDataset() = default;
  TransitionDataset(int state_dim, int action_dim);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int size() const { return static_cast<int>(states_.size()); }
  bool empty() const { return states_.empty(); }

  void Append(const Eigen::VectorXd& state, const Eigen::VectorXd& action,
              const Eigen::VectorXd& next_state);

  const Eigen::VectorXd& state(int n) const { return states_[n]; }
  const Eigen::VectorXd& action(int n) const { return actions_[n]; }
  const Eigen::VectorXd& next_state(int n) const { return next_states_[n]; }

  // (d_s + d_a) x N inputs and d_s x N deltas s' - s.
  Eigen::MatrixXd Inputs() const;
  Eigen::MatrixXd Deltas() const;

  // Std floored at kNormalizationStdFloor.
  Normalization ComputeNormalization() const;

 private:
  int state_dim_ = 0;
  int action_dim_ = 0;
  std::vector<Eigen::VectorXd> states_;
  std::vector<Eigen::VectorXd> actions_;
  std::vector<Eigen::VectorXd> next_states_;
};

}  // namespace vimpc

#endif  // VIMPC_DYNAMICS_H_
