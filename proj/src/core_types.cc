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

#include "vimpc/core_types.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace vimpc {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
      return "InvalidConfig";
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kEmptyBatch:
      return "EmptyBatch";
    case ErrorCode::kAllZeroWeights:
      return "AllZeroWeights";
    case ErrorCode::kInsufficientData:
      return "InsufficientData";
    case ErrorCode::kUnknownKind:
      return "UnknownKind";
    case ErrorCode::kParseError:
      return "ParseError";
    case ErrorCode::kValidationError:
      return "ValidationError";
    case ErrorCode::kPlanFailed:
      return "PlanFailed";
    case ErrorCode::kIo:
      return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, std::string field, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) +
                         (field.empty() ? "" : "(" + field + ")") + ": " +
                         message),
      code_(code),
      field_(std::move(field)) {}

ActionSequence::ActionSequence(int horizon, int action_dim)
    : horizon_(horizon),
      action_dim_(action_dim),
      values_(Eigen::VectorXd::Zero(horizon * action_dim)) {}

ActionSequence::ActionSequence(int horizon, int action_dim,
                               Eigen::VectorXd values)
    : horizon_(horizon), action_dim_(action_dim), values_(std::move(values)) {
  if (values_.size() != horizon * action_dim) {
    throw Error(ErrorCode::kInvalidArgument, "values",
                "action sequence size does not match horizon * action_dim");
  }
}

bool ActionBounds::Contains(const Eigen::VectorXd& action) const {
  return (action.array() >= lower.array()).all() &&
         (action.array() <= upper.array()).all();
}

Eigen::VectorXd ActionBounds::Clip(const Eigen::VectorXd& action) const {
  return action.cwiseMax(lower).cwiseMin(upper);
}

void ActionBounds::ClipInPlace(ActionSequence* sequence) const {
  const int da = sequence->action_dim();
  for (int t = 0; t < sequence->horizon(); ++t) {
    for (int j = 0; j < da; ++j) {
      double& v = (*sequence)(t, j);
      v = std::min(std::max(v, lower[j]), upper[j]);
    }
  }
}

ActionBounds ActionBounds::Symmetric(int dim, double magnitude) {
  return {Eigen::VectorXd::Constant(dim, -magnitude),
          Eigen::VectorXd::Constant(dim, magnitude)};
}

TrajectoryBatch::TrajectoryBatch(int k, int p, int t, int ds)
    : num_candidates(k),
      num_rollouts(p),
      horizon(t),
      state_dim(ds),
      states(static_cast<std::size_t>(k) * p * (t + 1) * ds, 0.0),
      rewards(Eigen::MatrixXd::Zero(k, p)),
      non_finite(static_cast<std::size_t>(k) * p, 0) {}

ParticleWeights ParticleWeights::FromUnnormalized(
    const Eigen::VectorXd& unnormalized) {
  if (!unnormalized.allFinite() || (unnormalized.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "weights",
                "weights must be finite and nonnegative");
  }
  const double total = unnormalized.sum();
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kAllZeroWeights, "weights",
                "all particle weights are zero");
  }
  return ParticleWeights(unnormalized / total);
}

ParticleWeights ParticleWeights::Uniform(int k) {
  return ParticleWeights(Eigen::VectorXd::Constant(k, 1.0 / k));
}

std::string_view OptimalityKindName(OptimalityKind kind) {
  switch (kind) {
    case OptimalityKind::kCem:
      return "CEM";
    case OptimalityKind::kMppi:
      return "MPPI";
    case OptimalityKind::kPropCem:
      return "PropCEM";
    case OptimalityKind::kCmaEs:
      return "CMAES";
  }
  return "CEM";
}

OptimalityKind ParseOptimalityKind(std::string_view name) {
  if (name == "CEM") return OptimalityKind::kCem;
  if (name == "MPPI") return OptimalityKind::kMppi;
  if (name == "PropCEM" || name == "Prop-CEM") return OptimalityKind::kPropCem;
  if (name == "CMAES" || name == "CMA-ES") return OptimalityKind::kCmaEs;
  throw Error(ErrorCode::kUnknownKind, "optimality",
              "unknown optimality definition '" + std::string(name) + "'");
}

OptimalityConfig ValidateConfig(const OptimalityConfig& config,
                                const EnvSpec& env) {
  if (!(config.lambda > 0.0) || !std::isfinite(config.lambda)) {
    throw Error(ErrorCode::kInvalidConfig, "lambda", "lambda must be > 0");
  }
  if (!(config.elite_fraction > 0.0 && config.elite_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "elite_fraction",
                "elite fraction must lie in (0, 1]");
  }
  if (!(config.kappa >= 0.0) || !std::isfinite(config.kappa)) {
    throw Error(ErrorCode::kInvalidConfig, "kappa", "kappa must be >= 0");
  }
  if (!config.max_ent && config.kappa != 0.0) {
    throw Error(ErrorCode::kInvalidConfig, "kappa",
                "kappa must be 0 when max_ent is false");
  }
  if (env.action_dim > 0) {
    if (env.bounds.lower.size() != env.action_dim ||
        env.bounds.upper.size() != env.action_dim) {
      throw Error(ErrorCode::kInvalidConfig, "bounds",
                  "bounds dimension does not match action_dim");
    }
    if ((env.bounds.lower.array() > env.bounds.upper.array()).any()) {
      throw Error(ErrorCode::kInvalidConfig, "bounds",
                  "lower bound exceeds upper bound");
    }
  }
  return config;
}

}  // namespace vimpc
