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

#ifndef VIMPC_CORE_TYPES_H_
#define VIMPC_CORE_TYPES_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace vimpc {

inline constexpr std::string_view kLibraryVersion = "0.1.0";

enum class ErrorCode {
  kInvalidConfig,
  kInvalidArgument,
  kEmptyBatch,
  kAllZeroWeights,
  kInsufficientData,
  kUnknownKind,
  kParseError,
  kValidationError,
  kPlanFailed,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// Library-wide exception. `field` names the offending config field or
// argument when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string field, const std::string& message);

  ErrorCode code() const { return code_; }
  const std::string& field() const { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

// Planned controls a_{1:T}, stored time-major: entry (t, j) lives at
// values[t * action_dim + j]. The flat layout is what the mixture
// posterior operates on.
class ActionSequence {
 public:
  ActionSequence() = default;
  ActionSequence(int horizon, int action_dim);
  ActionSequence(int horizon, int action_dim, Eigen::VectorXd values);

  int horizon() const { return horizon_; }
  int action_dim() const { return action_dim_; }
  int size() const { return horizon_ * action_dim_; }

  double operator()(int t, int j) const { return values_[t * action_dim_ + j]; }
  double& operator()(int t, int j) { return values_[t * action_dim_ + j]; }

  // Action at time step t (0-based).
  Eigen::VectorXd step(int t) const {
    return values_.segment(t * action_dim_, action_dim_);
  }

  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  bool AllFinite() const { return values_.allFinite(); }

 private:
  int horizon_ = 0;
  int action_dim_ = 0;
  Eigen::VectorXd values_;
};

// Elementwise box bounds on a single action vector.
struct ActionBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool Contains(const Eigen::VectorXd& action) const;
  Eigen::VectorXd Clip(const Eigen::VectorXd& action) const;
  void ClipInPlace(ActionSequence* sequence) const;
  Eigen::VectorXd Midpoint() const { return 0.5 * (lower + upper); }

  static ActionBounds Symmetric(int dim, double magnitude);
};

// Dimensions and bounds of an environment, as far as configuration
// validation needs to know.
struct EnvSpec {
  int state_dim = 0;
  int action_dim = 0;
  ActionBounds bounds;
};

// Sampled states and summed rewards for K candidates x P rollouts.
struct TrajectoryBatch {
  int num_candidates = 0;  // K
  int num_rollouts = 0;    // P
  int horizon = 0;         // T
  int state_dim = 0;

  // K*P*(T+1)*d_s values, rollout-major then time then state coordinate.
  std::vector<double> states;
  // K x P summed rewards r(tau_{k,i}).
  Eigen::MatrixXd rewards;
  // K*P flags set when a rollout produced a non-finite state.
  std::vector<std::uint8_t> non_finite;

  TrajectoryBatch() = default;
  TrajectoryBatch(int k, int p, int t, int ds);

  double* state(int k, int i, int t) {
    return states.data() + StateOffset(k, i, t);
  }
  const double* state(int k, int i, int t) const {
    return states.data() + StateOffset(k, i, t);
  }
  Eigen::Map<const Eigen::VectorXd> StateVector(int k, int i, int t) const {
    return Eigen::Map<const Eigen::VectorXd>(state(k, i, t), state_dim);
  }
  bool flagged(int k, int i) const {
    return non_finite[k * num_rollouts + i] != 0;
  }

 private:
  std::size_t StateOffset(int k, int i, int t) const {
    return ((static_cast<std::size_t>(k) * num_rollouts + i) * (horizon + 1) +
            t) *
           state_dim;
  }
};

// Normalized, nonnegative particle weights W.
class ParticleWeights {
 public:
  ParticleWeights() = default;

  // Normalizes `unnormalized` to sum 1. Throws kAllZeroWeights if the sum is
  // zero and kInvalidArgument on negative or non-finite entries.
  static ParticleWeights FromUnnormalized(const Eigen::VectorXd& unnormalized);
  static ParticleWeights Uniform(int k);

  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int k) const { return w_[k]; }
  const Eigen::VectorXd& values() const { return w_; }

  // Kish effective sample size 1 / sum(w^2).
  double EffectiveSampleSize() const { return 1.0 / w_.squaredNorm(); }

 private:
  explicit ParticleWeights(Eigen::VectorXd w) : w_(std::move(w)) {}
  Eigen::VectorXd w_;
};

enum class OptimalityKind { kCem, kMppi, kPropCem, kCmaEs };

std::string_view OptimalityKindName(OptimalityKind kind);
// Accepts "CEM", "MPPI", "PropCEM" / "Prop-CEM", "CMAES" / "CMA-ES".
OptimalityKind ParseOptimalityKind(std::string_view name);

// The (optimality, max_ent) part of a VIMPC(optimality, dist, max_ent)
// triple plus the hyperparameters each transform needs.
struct OptimalityConfig {
  OptimalityKind kind = OptimalityKind::kCem;
  double elite_fraction = 0.1;  // CEM and CMA-ES
  double lambda = 0.1;          // MPPI inverse temperature
  double kappa = 0.0;           // entropy-bonus weight
  bool max_ent = false;
};

// Returns `config` unchanged if valid; throws Error(kInvalidConfig, field)
// otherwise. Rejects lambda <= 0, elite_fraction outside (0, 1], kappa < 0,
// kappa != 0 without max_ent, and malformed bounds in `env`.
OptimalityConfig ValidateConfig(const OptimalityConfig& config,
                                const EnvSpec& env);

}  // namespace vimpc

#endif  // VIMPC_CORE_TYPES_H_
